#include "aerotask/world.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "aerotask/core.hpp"
#include "aerotask/error.hpp"

namespace aerotask {

namespace {

std::string compact_key(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

double read_number(const std::string& tok, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw Error(Errc::MalformedDocument,
                "line " + std::to_string(line_no) + ": '" + tok + "' is not a number");
  }
  return v;
}

std::string fmt_point(Vec3 p) {
  return "(" + format_number(p.x) + ", " + format_number(p.y) + ", " + format_number(p.z) + ")";
}

}  // namespace

const NamedBox* WorldModel::room(std::string_view name) const {
  auto it = std::find_if(rooms.begin(), rooms.end(), [&](const auto& r) { return r.name == name; });
  return it == rooms.end() ? nullptr : &*it;
}

const NamedPoint* WorldModel::photo_target(std::string_view name) const {
  auto it = std::find_if(photo_targets.begin(), photo_targets.end(),
                         [&](const auto& p) { return p.name == name; });
  return it == photo_targets.end() ? nullptr : &*it;
}

const NamedPoint* WorldModel::monitor(std::string_view name) const {
  auto it = std::find_if(monitors.begin(), monitors.end(),
                         [&](const auto& p) { return p.name == name; });
  return it == monitors.end() ? nullptr : &*it;
}

std::optional<Vec3> WorldModel::waypoint(std::string_view name) const {
  if (name == kHomeWaypoint) return start.position;
  if (const auto* r = room(name)) return r->box.center();
  if (const auto* p = photo_target(name)) return p->position;
  if (const auto* m = monitor(name)) return m->position;
  return std::nullopt;
}

WorldModel load_world(std::string_view document) {
  WorldModel world;
  std::set<std::string> names;
  std::istringstream in{std::string(document)};
  std::string line;
  std::size_t line_no = 0;

  auto claim_name = [&](const std::string& name, bool is_room) {
    if (!is_identifier(name) || name == kHomeWaypoint) {
      throw Error(Errc::MalformedDocument,
                  "line " + std::to_string(line_no) + ": bad name '" + name + "'");
    }
    if (!names.insert(name).second) {
      throw Error(is_room ? Errc::DuplicateRoomName : Errc::MalformedDocument,
                  "line " + std::to_string(line_no) + ": duplicate name '" + name + "'");
    }
  };
  auto check_point = [&](Vec3 p) {
    if (!world.bounds.contains(p)) {
      throw Error(Errc::GeometryOutOfBounds, "line " + std::to_string(line_no));
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    const std::string& kind = tok[0];
    auto expect = [&](std::size_t n) {
      if (tok.size() != n) {
        throw Error(Errc::MalformedDocument, "line " + std::to_string(line_no) + ": '" + kind +
                                                 "' expects " + std::to_string(n - 1) +
                                                 " fields");
      }
    };
    auto num = [&](std::size_t i) { return read_number(tok[i], line_no); };

    if (kind == "world") {
      expect(2);
      world.id = tok[1];
    } else if (kind == "start") {
      if (tok.size() != 4 && tok.size() != 5) expect(5);
      world.start.position = {num(1), num(2), num(3)};
      world.start.yaw_deg = tok.size() == 5 ? num(4) : 0.0;
      check_point(world.start.position);
    } else if (kind == "room" || kind == "obstacle" || kind == "danger") {
      expect(8);
      claim_name(tok[1], kind == "room");
      Box box{{num(2), num(3), num(4)}, {num(5), num(6), num(7)}};
      if (!box.well_formed()) {
        throw Error(Errc::MalformedDocument,
                    "line " + std::to_string(line_no) + ": box needs lo < hi on every axis");
      }
      if (!world.bounds.contains(box)) {
        throw Error(Errc::GeometryOutOfBounds,
                    "line " + std::to_string(line_no) + ": '" + tok[1] + "' leaves the workspace");
      }
      auto& list = kind == "room" ? world.rooms : kind == "obstacle" ? world.obstacles : world.dangers;
      list.push_back({tok[1], box});
    } else if (kind == "monitor" || kind == "photo") {
      expect(5);
      claim_name(tok[1], false);
      Vec3 p{num(2), num(3), num(4)};
      check_point(p);
      (kind == "monitor" ? world.monitors : world.photo_targets).push_back({tok[1], p});
    } else {
      throw Error(Errc::MalformedDocument,
                  "line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
    }
  }
  return world;
}

WorldModel load_world_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedDocument, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto world = load_world(buf.str());
  if (world.id.empty()) world.id = path.stem().string();
  return world;
}

std::string room_type(std::string_view room_name) {
  std::string s(room_name);
  while (!s.empty() && (std::isdigit(static_cast<unsigned char>(s.back())) || s.back() == '_')) {
    s.pop_back();
  }
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::vector<std::string> resolve_target_phrase(const WorldModel& world, std::string_view phrase,
                                               int count) {
  const std::string key = compact_key(phrase);
  if (key.empty()) return {};
  if (key == "home" || key == "start" || key == "startingpoint" || key == "launchpoint") {
    return {std::string(kHomeWaypoint)};
  }
  auto exact = [&](const std::string& name) { return compact_key(name) == key; };
  for (const auto& r : world.rooms) {
    if (exact(r.name)) return {r.name};
  }
  for (const auto& p : world.photo_targets) {
    if (exact(p.name)) return {p.name};
  }
  for (const auto& m : world.monitors) {
    if (exact(m.name)) return {m.name};
  }
  std::vector<std::string> of_type;
  for (const auto& r : world.rooms) {
    if (compact_key(room_type(r.name)) == key) of_type.push_back(r.name);
  }
  if (of_type.empty()) return {};
  if (count < 0) return of_type;
  if (static_cast<std::size_t>(count) > of_type.size()) return {};
  of_type.resize(static_cast<std::size_t>(count));
  return of_type;
}

std::vector<std::string> describe_objects(const WorldModel& world) {
  std::vector<std::string> lines;
  auto boxes = [&](std::string_view kind, const std::vector<NamedBox>& list) {
    for (const auto& b : list) {
      lines.push_back(std::string(kind) + " " + b.name + " center " + fmt_point(b.box.center()) +
                      " extent " + fmt_point(b.box.lo) + "-" + fmt_point(b.box.hi));
    }
  };
  auto points = [&](std::string_view kind, const std::vector<NamedPoint>& list) {
    for (const auto& p : list) {
      lines.push_back(std::string(kind) + " " + p.name + " at " + fmt_point(p.position));
    }
  };
  boxes("room", world.rooms);
  boxes("obstacle", world.obstacles);
  boxes("danger", world.dangers);
  points("monitor", world.monitors);
  points("photo", world.photo_targets);
  return lines;
}

}  // namespace aerotask
