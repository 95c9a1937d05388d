#include "rme/event.hpp"

#include <json.hpp>

#include <ostream>
#include <sstream>

namespace rme {

using json = nlohmann::ordered_json;

const char* ev_name(Ev e) {
  switch (e) {
    case Ev::Read: return "read";
    case Ev::Write: return "write";
    case Ev::Cas: return "cas";
    case Ev::Fas: return "fas";
    case Ev::Local: return "local";
    case Ev::Crash: return "crash";
    case Ev::Restart: return "restart";
    case Ev::Marker: return "marker";
  }
  return "?";
}

const char* mk_name(Mk m) {
  switch (m) {
    case Mk::NcsBegin: return "ncs_begin";
    case Mk::RecoverBegin: return "recover_begin";
    case Mk::RecoverEnd: return "recover_end";
    case Mk::EnterBegin: return "enter_begin";
    case Mk::DoorwayEnd: return "doorway_end";
    case Mk::CsBegin: return "cs_begin";
    case Mk::CsEnd: return "cs_end";
    case Mk::ExitBegin: return "exit_begin";
    case Mk::ExitEnd: return "exit_end";
  }
  return "?";
}

namespace {

Ev ev_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(Ev::Marker); ++i) {
    Ev e = static_cast<Ev>(i);
    if (s == ev_name(e)) return e;
  }
  throw MalformedHistory("unknown event kind: " + s);
}

Mk mk_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(Mk::ExitEnd); ++i) {
    Mk m = static_cast<Mk>(i);
    if (s == mk_name(m)) return m;
  }
  throw MalformedHistory("unknown marker kind: " + s);
}

}  // namespace

const LockInfo* History::lock_by_name(const std::string& name) const {
  for (const LockInfo& li : locks)
    if (li.name == name) return &li;
  return nullptr;
}

std::vector<LockId> History::locks_of_kind(const std::string& kind) const {
  std::vector<LockId> out;
  for (const LockInfo& li : locks)
    if (li.kind == kind) out.push_back(li.id);
  return out;
}

void write_history(const History& h, std::ostream& os) {
  json meta;
  meta["type"] = "meta";
  meta["n"] = h.n;
  meta["model"] = h.model;
  meta["strong_cc"] = h.strong_cc;
  meta["seed"] = h.seed;
  json locks = json::array();
  for (const LockInfo& li : h.locks) {
    json l;
    l["id"] = li.id;
    l["name"] = li.name;
    l["kind"] = li.kind;
    l["level"] = li.level;
    if (!li.pred_words.empty()) {
      l["tail"] = li.tail_word;
      l["pred"] = li.pred_words;
    }
    locks.push_back(l);
  }
  meta["locks"] = locks;
  os << meta.dump() << "\n";

  for (const Event& e : h.events) {
    json j;
    j["seq"] = e.seq;
    j["pid"] = e.pid;
    j["kind"] = ev_name(e.kind);
    switch (e.kind) {
      case Ev::Read:
      case Ev::Fas:
        j["word"] = e.word;
        j["arg"] = e.arg;
        j["val"] = e.val;
        break;
      case Ev::Write:
        j["word"] = e.word;
        j["val"] = e.val;
        break;
      case Ev::Cas:
        j["word"] = e.word;
        j["arg"] = e.arg;
        j["val"] = e.val;
        j["ok"] = e.ok;
        break;
      case Ev::Marker:
        j["marker"] = mk_name(e.marker);
        j["lock"] = e.lock;
        break;
      case Ev::Crash:
        if (!e.unsafe_for.empty()) j["unsafe_for"] = e.unsafe_for;
        break;
      default:
        break;
    }
    j["rmr"] = e.rmr ? 1 : 0;
    os << j.dump() << "\n";
  }

  json nodes;
  nodes["type"] = "nodes";
  json entries = json::array();
  for (const NodeInfo& ni : h.nodes) {
    json n;
    n["ref"] = ni.ref;
    n["locked"] = ni.locked_word;
    n["next"] = ni.next_word;
    n["owner"] = ni.owner;
    entries.push_back(n);
  }
  nodes["entries"] = entries;
  os << nodes.dump() << "\n";
}

History read_history(std::istream& is) {
  History h;
  std::string line;
  bool saw_meta = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.contains("type")) {
      std::string type = j["type"];
      if (type == "meta") {
        h.n = j["n"];
        h.model = j["model"];
        h.strong_cc = j["strong_cc"];
        h.seed = j["seed"];
        for (const auto& l : j["locks"]) {
          LockInfo li;
          li.id = l["id"];
          li.name = l["name"];
          li.kind = l["kind"];
          li.level = l["level"];
          if (l.contains("tail")) li.tail_word = l["tail"];
          if (l.contains("pred"))
            for (const auto& w : l["pred"]) li.pred_words.push_back(w.get<WordId>());
          h.locks.push_back(li);
        }
        saw_meta = true;
      } else if (type == "nodes") {
        for (const auto& n : j["entries"]) {
          NodeInfo ni;
          ni.ref = n["ref"];
          ni.locked_word = n["locked"];
          ni.next_word = n["next"];
          ni.owner = n["owner"];
          h.nodes.push_back(ni);
        }
      }
      continue;
    }
    Event e;
    e.seq = j["seq"];
    e.pid = j["pid"];
    e.kind = ev_from_name(j["kind"]);
    if (j.contains("word")) e.word = j["word"];
    if (j.contains("arg")) e.arg = j["arg"];
    if (j.contains("val")) e.val = j["val"];
    if (j.contains("ok")) e.ok = j["ok"];
    if (j.contains("marker")) e.marker = mk_from_name(j["marker"]);
    if (j.contains("lock")) e.lock = j["lock"];
    if (j.contains("unsafe_for"))
      for (const auto& u : j["unsafe_for"]) e.unsafe_for.push_back(u.get<LockId>());
    e.rmr = j["rmr"].get<int>() != 0;
    h.events.push_back(e);
  }
  if (!saw_meta) throw MalformedHistory("history stream has no meta line");
  return h;
}

std::string history_to_string(const History& h) {
  std::ostringstream os;
  write_history(h, os);
  return os.str();
}

History history_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_history(is);
}

}  // namespace rme
