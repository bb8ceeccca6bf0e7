#include "aerotask/planning.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aerotask/error.hpp"

namespace aerotask {

namespace {

constexpr std::string_view kRoleText =
    "You are the planning agent of an indoor quadrotor. Read the user request and answer in "
    "the format named under REQUEST. Refer only to targets that exist in the scene. A plan "
    "describes each step in plain words; flight commands belong to the execution agent.";

constexpr std::string_view kTemplates =
    "request: move forward 5 meters and take a picture\n"
    "1. [move] fly forward 5 meters\n"
    "2. [capture] take a picture\n"
    "request: take pictures of the kitchen and two bedrooms\n"
    "1. [capture] @kitchen fly to kitchen and take a picture\n"
    "2. [capture] @bedroom1 fly to bedroom1 and take a picture\n"
    "3. [capture] @bedroom2 fly to bedroom2 and take a picture\n"
    "classify answer: label: SI | ST | CI | CT\n"
    "rewrite answer: instruction: <explicit request>";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string join_set(const std::set<std::string>& s) {
  return join(std::vector<std::string>(s.begin(), s.end()), " ");
}

/// Value of a "key: value" line inside a section body.
std::optional<std::string> field(std::string_view body, std::string_view key) {
  for (const auto& line : lines_of(body)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    if (trim(line.substr(0, colon)) == key) return trim(line.substr(colon + 1));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reference backend internals
// ---------------------------------------------------------------------------

/// Names listed in a SCENE block, enough for target resolution.
WorldModel scene_world(std::string_view scene) {
  WorldModel w;
  for (const auto& line : lines_of(scene)) {
    std::istringstream in(line);
    std::string kind, name;
    if (!(in >> kind >> name)) continue;
    if (kind == "world:") {
      w.id = name;
    } else if (kind == "room") {
      w.rooms.push_back({name, {}});
    } else if (kind == "photo") {
      w.photo_targets.push_back({name, {}});
    } else if (kind == "monitor") {
      w.monitors.push_back({name, {}});
    }
  }
  return w;
}

std::string count_word(int n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five",
                                "six",  "seven", "eight", "nine", "ten"};
  if (n < 0) return "all";
  if (n <= 10) return words[n];
  return std::to_string(n);
}

std::string rewrite_implicit(const std::string& request, const std::string& scene) {
  const WorldModel w = scene_world(scene);
  struct Candidate {
    std::vector<std::string> words;
    std::string label;  // singular noun phrase
    bool is_type;
  };
  std::vector<Candidate> candidates;
  auto split_words = [](const std::string& name) {
    std::string spaced = name;
    for (char& c : spaced) {
      if (c == '_') c = ' ';
    }
    std::vector<std::string> out;
    std::istringstream in(spaced);
    for (std::string t; in >> t;) out.push_back(t);
    return out;
  };
  std::set<std::string> seen_types;
  for (const auto& r : w.rooms) {
    const std::string type = room_type(r.name);
    if (seen_types.insert(type).second) candidates.push_back({split_words(type), type, true});
  }
  for (const auto* list : {&w.photo_targets, &w.monitors}) {
    for (const auto& p : *list) {
      candidates.push_back({split_words(p.name), join(split_words(p.name), " "), false});
    }
  }
  // Longest candidates first so "living room" wins over "room".
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.words.size() > b.words.size(); });

  const auto tokens = lexicon::tokenize(request);
  struct Mention {
    std::string label;
    int count;
  };
  std::vector<Mention> mentions;
  std::set<std::string> cues;
  static const std::map<std::string, int, std::less<>> counts{
      {"two", 2}, {"three", 3}, {"four", 4}, {"both", 2}, {"all", -1}, {"every", -1}};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    cues.insert(tokens[i].lemma);
    for (const auto& c : candidates) {
      if (c.words.empty() || i + c.words.size() > tokens.size()) continue;
      bool match = true;
      for (std::size_t k = 0; k < c.words.size() && match; ++k) {
        match = tokens[i + k].lemma == lexicon::lemmatize(c.words[k]) || tokens[i + k].text == c.words[k];
      }
      if (!match) continue;
      int n = 1;
      std::size_t j = i;
      while (j > 0 && (tokens[j - 1].lemma == "the" || tokens[j - 1].lemma == "of" ||
                       tokens[j - 1].lemma == "my")) {
        --j;
      }
      if (j > 0) {
        if (auto it = counts.find(tokens[j - 1].lemma); it != counts.end()) n = it->second;
      }
      if (!c.is_type) n = 1;
      if (std::none_of(mentions.begin(), mentions.end(),
                       [&](const Mention& m) { return m.label == c.label; })) {
        mentions.push_back({c.label, n});
      }
      i += c.words.size() - 1;
      break;
    }
  }
  if (mentions.empty()) return request;

  auto phrase = [](const Mention& m) {
    if (m.count == 1) return "the " + m.label;
    return count_word(m.count) + " " + m.label + "s";
  };
  std::string out;
  if (mentions.size() == 1 && mentions[0].count == 1) {
    out = "take a picture of " + phrase(mentions[0]);
  } else {
    out = "take pictures of ";
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      if (i > 0) out += i + 1 == mentions.size() ? " and " : ", ";
      out += phrase(mentions[i]);
    }
  }
  static const std::set<std::string> safety{"careful", "crash", "bump", "hit", "collide",
                                            "collision", "obstacle", "clutter", "cluttered",
                                            "safe", "safely", "furniture"};
  static const std::set<std::string> homing{"return", "home"};
  if (std::any_of(safety.begin(), safety.end(), [&](const auto& w) { return cues.count(w); })) {
    out += " and avoid obstacles";
  }
  if (std::any_of(homing.begin(), homing.end(), [&](const auto& w) { return cues.count(w); })) {
    out += " then return home";
  }
  return out;
}

std::string direction_text(Direction d) { return std::string(to_string(d)); }

std::string reference_plan(const std::string& instruction, const std::string& scene,
                           bool have_scene) {
  const auto parsed = lexicon::parse_instruction(instruction);
  const WorldModel w = scene_world(scene);
  const bool avoid = std::any_of(parsed.actions.begin(), parsed.actions.end(), [](const auto& a) {
    return a.kind == lexicon::ActionKind::avoid;
  });
  const std::string guard = avoid ? " while avoiding obstacles" : "";

  struct Item {
    lexicon::ActionKind kind;
    const lexicon::Action* action;
    std::string target;
  };
  std::vector<Item> items;
  for (const auto& a : parsed.actions) {
    if (a.kind == lexicon::ActionKind::avoid) continue;
    if (!a.target) {
      items.push_back({a.kind, &a, ""});
      continue;
    }
    std::vector<std::string> names;
    if (have_scene) names = resolve_target_phrase(w, a.target->phrase, a.target->count);
    if (names.empty()) {
      auto key = resolve_target_phrase(WorldModel{}, a.target->phrase, 1);
      std::string raw = key.empty() ? a.target->phrase : key.front();
      std::replace(raw.begin(), raw.end(), ' ', '_');
      names.push_back(raw);
    }
    for (auto& n : names) items.push_back({a.kind, &a, n});
  }

  std::vector<std::string> steps;
  bool any_motion = false;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Item& it = items[i];
    const auto& a = *it.action;
    using K = lexicon::ActionKind;
    switch (it.kind) {
      case K::takeoff:
        steps.push_back("[takeoff] take off from the current spot");
        break;
      case K::land:
        steps.push_back("[land] land at the current position");
        break;
      case K::hover:
        steps.push_back("[hover] hold position for " +
                        format_number(a.amount.value_or(lexicon::kDefaultHoverSeconds)) + " seconds");
        break;
      case K::rotate: {
        const double deg = a.amount.value_or(lexicon::kDefaultTurnDegrees);
        steps.push_back(std::string("[rotate] turn ") + (deg < 0 ? "right" : "left") + " by " +
                        format_number(std::abs(deg)) + " degrees");
        break;
      }
      case K::move:
        any_motion = true;
        steps.push_back("[move] fly " + direction_text(a.direction) + " " +
                        format_number(a.amount.value_or(lexicon::kDefaultMoveMeters)) + " meters" +
                        guard);
        break;
      case K::go_to:
        any_motion = true;
        if (it.target == kHomeWaypoint) {
          steps.push_back("[goto] @home return home" + guard);
        } else if (i + 1 < items.size() && items[i + 1].kind == K::capture &&
                   items[i + 1].target == it.target) {
          steps.push_back("[capture] @" + it.target + " fly to " + it.target +
                          " and take a picture" + guard);
          ++i;
        } else {
          steps.push_back("[goto] @" + it.target + " fly to " + it.target + guard);
        }
        break;
      case K::capture:
      case K::search:
        if (it.target.empty()) {
          steps.push_back(it.kind == K::search ? "[search] look around the area"
                                               : "[capture] take a picture");
        } else {
          any_motion = true;
          steps.push_back("[capture] @" + it.target + " fly to " + it.target +
                          " and take a picture" + guard);
        }
        break;
      case K::track:
        steps.push_back(it.target.empty() ? "[track] keep the subject in view"
                                          : "[track] @" + it.target + " keep " + it.target + " in view");
        break;
      case K::avoid:
        break;
    }
  }
  if (avoid && !any_motion) steps.push_back("[avoid] hold position clear of obstacles");

  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out += std::to_string(i + 1) + ". " + steps[i] + "\n";
  }
  return out;
}

/// "step N: tool k=v ..." lines.
std::map<std::size_t, std::string> tool_lines(std::string_view body) {
  std::map<std::size_t, std::string> out;
  for (const auto& line : lines_of(body)) {
    std::istringstream in(line);
    std::string word, num;
    if (!(in >> word >> num) || word != "step" || num.empty() || num.back() != ':') continue;
    num.pop_back();
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
    if (ec != std::errc{}) continue;
    std::string rest;
    std::getline(in, rest);
    out[n] = trim(rest);
  }
  return out;
}

std::string reference_translate(const std::string& steps_body, const std::string& tools_body) {
  const Plan p = parse_plan(steps_body, {});
  const auto tools = tool_lines(tools_body);
  std::string out;
  std::string here;  // waypoint the vehicle is known to be at
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const PlanStep& s = p.steps[i];
    out += "# step " + std::to_string(i + 1) + "\n";
    const auto parsed = lexicon::parse_instruction(s.description);
    auto first = [&](lexicon::ActionKind k) -> const lexicon::Action* {
      for (const auto& a : parsed.actions) {
        if (a.kind == k) return &a;
      }
      return nullptr;
    };
    const auto tool = tools.find(i + 1);
    const std::string target = s.target.value_or("");
    const std::string& h = s.action_hint;
    if (tool != tools.end()) {
      out += "invoke_tool " + tool->second + "\n";
      if ((h == "capture" || h == "search") && !target.empty()) out += "capture " + target + "\n";
      here = (h == "move") ? "" : target;
      continue;
    }
    if (h == "takeoff") {
      out += "takeoff\n";
    } else if (h == "land") {
      out += "land\n";
      here.clear();
    } else if (h == "hover") {
      const auto* a = first(lexicon::ActionKind::hover);
      out += "hover " + format_number(a && a->amount ? *a->amount : lexicon::kDefaultHoverSeconds) + "\n";
    } else if (h == "rotate") {
      const auto* a = first(lexicon::ActionKind::rotate);
      out += "rotate " + format_number(a && a->amount ? *a->amount : lexicon::kDefaultTurnDegrees) + "\n";
    } else if (h == "move") {
      if (const auto* a = first(lexicon::ActionKind::move)) {
        out += "move " + direction_text(a->direction) + " " +
               format_number(a->amount.value_or(lexicon::kDefaultMoveMeters)) + "\n";
        here.clear();
      }
    } else if (h == "goto" && !target.empty()) {
      out += "goto " + target + "\n";
      here = target;
    } else if (h == "capture" || h == "search") {
      if (!target.empty() && target != here) out += "goto " + target + "\n";
      out += target.empty() ? "capture\n" : "capture " + target + "\n";
      if (!target.empty()) here = target;
    } else if (h == "avoid") {
      out += "hover 1\n";
    }
  }
  return out;
}

std::string reference_classify(const std::map<std::string, std::string>& sec) {
  TaskLabel label;
  if (auto f = sec.find("FEATURES"); f != sec.end()) {
    double score = 0.0, theta = 0.0;
    std::istringstream in(f->second);
    for (std::string kv; in >> kv;) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      double v = 0.0;
      std::from_chars(kv.data() + eq + 1, kv.data() + kv.size(), v);
      if (key == "score") score = v;
      if (key == "theta") theta = v;
    }
    label.complexity = score <= theta ? Complexity::simple : Complexity::complex;
  }
  if (auto k = sec.find("KEYWORDS"); k != sec.end()) {
    auto unknown = field(k->second, "unknown");
    label.autonomy = unknown && !unknown->empty() ? Autonomy::tool_assisted : Autonomy::independent;
  }
  return "label: " + to_string(label) + "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

std::string RecordingBackend::complete(const std::string& prompt) {
  std::string response = inner_.complete(prompt);
  observer_(prompt, response);
  return response;
}

std::string ReferenceBackend::complete(const std::string& prompt) {
  const auto sec = prompt_sections(prompt);
  const auto req = sec.find("REQUEST");
  if (req == sec.end()) return "I need a REQUEST section to answer.\n";
  const std::string kind = field(req->second, "kind").value_or("plan");
  const std::string instruction = field(req->second, "instruction").value_or("");
  const auto scene = sec.find("SCENE");
  const std::string scene_text = scene == sec.end() ? "" : scene->second;
  if (kind == "classify") return reference_classify(sec);
  if (kind == "rewrite") return "instruction: " + rewrite_implicit(instruction, scene_text) + "\n";
  if (kind == "translate") {
    const auto steps = sec.find("STEPS");
    const auto tools = sec.find("TOOLS");
    return reference_translate(steps == sec.end() ? "" : steps->second,
                               tools == sec.end() ? "" : tools->second);
  }
  return reference_plan(instruction, scene_text, scene != sec.end());
}

std::string_view to_string(PromptStyle s) {
  switch (s) {
    case PromptStyle::rp: return "RP";
    case PromptStyle::cp: return "CP";
    case PromptStyle::eip: return "EIP";
  }
  return "?";
}

std::optional<PromptStyle> parse_prompt_style(std::string_view s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "RP") return PromptStyle::rp;
  if (u == "CP") return PromptStyle::cp;
  if (u == "EIP") return PromptStyle::eip;
  return std::nullopt;
}

std::string_view to_string(PlanRule r) {
  switch (r) {
    case PlanRule::none: return "none";
    case PlanRule::unresolved_target: return "unresolved_target";
    case PlanRule::missing_target: return "missing_target";
    case PlanRule::duplicate_target: return "duplicate_target";
    case PlanRule::execution_detail: return "execution_detail";
    case PlanRule::over_length: return "over_length";
  }
  return "?";
}

std::optional<PlanRule> parse_plan_rule(std::string_view s) {
  for (auto r : {PlanRule::none, PlanRule::unresolved_target, PlanRule::missing_target,
                 PlanRule::duplicate_target, PlanRule::execution_detail, PlanRule::over_length}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::classify: return "classify";
    case PromptKind::rewrite: return "rewrite";
    case PromptKind::plan: return "plan";
    case PromptKind::translate: return "translate";
  }
  return "?";
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

void FailureMemory::add(FailureEntry entry) {
  if (capacity_ == 0) return;
  for (const auto& e : entries_) {
    if (e.digest == entry.digest) return;
  }
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) entries_.pop_front();
}

void FailureMemory::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::MalformedDocument, "cannot write " + path.string());
  for (const auto& e : entries_) {
    nlohmann::json j{{"digest", e.digest},
                     {"request", e.request},
                     {"plan", e.plan_summary},
                     {"rule", std::string(to_string(e.rule))}};
    out << j.dump() << '\n';
  }
}

FailureMemory FailureMemory::load(const std::filesystem::path& path, std::size_t capacity) {
  FailureMemory mem(capacity);
  std::ifstream in(path);
  if (!in) return mem;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      FailureEntry e;
      e.digest = j.at("digest").get<std::string>();
      e.request = j.at("request").get<std::string>();
      e.plan_summary = j.at("plan").get<std::string>();
      e.rule = parse_plan_rule(j.at("rule").get<std::string>()).value_or(PlanRule::none);
      mem.add(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::MalformedDocument, path.string() + ": " + ex.what());
    }
  }
  return mem;
}

PlanningContext extract_scene_and_actions(const TaskRequest& req, const WorldModel* world) {
  if (trim(req.instruction).empty()) throw Error(Errc::EmptyInput, "empty instruction");
  const auto parsed = lexicon::parse_instruction(req.instruction);
  PlanningContext ctx;
  ctx.actions = lexicon::action_sequence(parsed);
  if (ctx.actions.empty()) {
    throw Error(Errc::NoActionFound, "no action verb in '" + req.instruction + "'");
  }
  const auto keywords = lexicon::extract_keywords(req.instruction);
  for (const auto& t : parsed.targets) {
    for (const auto& tok : lexicon::tokenize(t.phrase)) {
      if (keywords.count(tok.lemma)) ctx.scene_keywords.insert(tok.lemma);
    }
  }
  if (world) {
    ctx.system_prompt = "world: " + world->id + "\n" + join(describe_objects(*world), "\n");
  }
  return ctx;
}

std::string build_prompt(PromptStyle style, const PlanningContext& ctx, const TaskRequest& req,
                         const FailureMemory& mem, const PromptTask& task) {
  std::string out;
  auto section = [&](std::string_view heading, std::string_view body) {
    out += "### ";
    out += heading;
    out += '\n';
    out += body;
    if (!body.empty() && body.back() != '\n') out += '\n';
  };
  section("ROLE", kRoleText);
  if (style != PromptStyle::rp) {
    if (!ctx.system_prompt.empty()) section("SCENE", ctx.system_prompt);
    section("TEMPLATES", kTemplates);
    if (!ctx.scene_keywords.empty()) section("SCENE KEYWORDS", join_set(ctx.scene_keywords));
    if (!ctx.actions.empty()) {
      std::vector<std::string> verbs;
      for (auto a : ctx.actions) verbs.emplace_back(lexicon::to_string(a));
      section("TASK ACTIONS", join(verbs, " "));
    }
  }
  if (style == PromptStyle::eip && !mem.empty()) {
    std::string body;
    for (const auto& e : mem.entries()) {
      body += "- request: " + e.request + " | failed plan: " + e.plan_summary +
              " | violated: " + std::string(to_string(e.rule)) + "\n";
    }
    section("NEGATIVE TEMPLATES", body);
  }
  for (const auto& [heading, body] : task.blocks) section(heading, body);
  std::string request = "kind: " + std::string(to_string(task.kind)) + "\n";
  if (task.label) request += "label: " + to_string(*task.label) + "\n";
  request += "phrasing: " + std::string(to_string(req.phrasing)) + "\n";
  std::string flat = req.instruction;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  request += "instruction: " + flat + "\n";
  section("REQUEST", request);
  return out;
}

std::map<std::string, std::string> prompt_sections(std::string_view prompt) {
  std::map<std::string, std::string> out;
  std::string current;
  bool in_section = false;
  for (const auto& line : lines_of(prompt)) {
    if (line.rfind("### ", 0) == 0) {
      current = trim(line.substr(4));
      out[current];
      in_section = true;
      continue;
    }
    if (in_section) out[current] += line + "\n";
  }
  for (auto& [k, v] : out) {
    while (!v.empty() && v.back() == '\n') v.pop_back();
  }
  return out;
}

Plan parse_plan(std::string_view text, TaskLabel label) {
  Plan p;
  p.label = label;
  for (const auto& raw : lines_of(text)) {
    const std::string line = trim(raw);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
    std::size_t number = 0;
    std::from_chars(line.data(), line.data() + i, number);
    if (number != p.steps.size() + 1) {
      throw Error(Errc::UnparseablePlan, "step numbers must run 1, 2, 3, ...: '" + line + "'");
    }
    std::string rest = trim(line.substr(i + 1));
    PlanStep step;
    if (rest.rfind('[', 0) == 0) {
      const auto close = rest.find(']');
      if (close == std::string::npos) {
        throw Error(Errc::UnparseablePlan, "unterminated action hint: '" + line + "'");
      }
      step.action_hint = trim(rest.substr(1, close - 1));
      rest = trim(rest.substr(close + 1));
    }
    if (rest.rfind('@', 0) == 0) {
      const auto sp = rest.find(' ');
      step.target = rest.substr(1, sp == std::string::npos ? std::string::npos : sp - 1);
      rest = sp == std::string::npos ? "" : trim(rest.substr(sp + 1));
    }
    if (rest.empty()) throw Error(Errc::UnparseablePlan, "step without description: '" + line + "'");
    step.description = rest;
    p.steps.push_back(std::move(step));
  }
  if (p.steps.empty()) throw Error(Errc::UnparseablePlan, "no numbered steps in backend output");
  return p;
}

std::string render_plan(const Plan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    out += std::to_string(i + 1) + ".";
    if (!s.action_hint.empty()) out += " [" + s.action_hint + "]";
    if (s.target) out += " @" + *s.target;
    out += " " + s.description + "\n";
  }
  return out;
}

std::string summarize_plan(const Plan& plan) {
  std::vector<std::string> parts;
  for (const auto& s : plan.steps) {
    std::string part = "[" + s.action_hint + "]";
    if (s.target) part += " @" + *s.target;
    part += " " + s.description;
    parts.push_back(part);
  }
  return join(parts, " ; ");
}

std::string rewrite_request(const TaskRequest& req, Backend& backend, PromptStyle style,
                            const PlanningContext& ctx, const FailureMemory& mem) {
  const std::string response =
      backend.complete(build_prompt(style, ctx, req, mem, {PromptKind::rewrite, {}, {}}));
  if (auto v = field(response, "instruction"); v && !v->empty()) return *v;
  throw Error(Errc::UnparseablePlan, "rewrite answer lacks an 'instruction:' line");
}

TaskLabel request_label(const TaskRequest& req, Backend& backend, PromptStyle style,
                        const PlanningContext& ctx, const FailureMemory& mem,
                        const std::vector<std::pair<std::string, std::string>>& evidence) {
  const std::string response =
      backend.complete(build_prompt(style, ctx, req, mem, {PromptKind::classify, {}, evidence}));
  if (auto v = field(response, "label")) {
    if (auto label = parse_label(*v)) return *label;
  }
  throw Error(Errc::UnparseablePlan, "classify answer lacks a 'label: XX' line");
}

Plan plan(const TaskRequest& req, TaskLabel label, Backend& backend, PromptStyle style,
          const PlanningContext& ctx, const FailureMemory& mem) {
  const std::string response =
      backend.complete(build_prompt(style, ctx, req, mem, {PromptKind::plan, label, {}}));
  return parse_plan(response, label);
}

PlanVerdict check_plan(const Plan& plan, std::string_view instruction, const WorldModel& world,
                       const MlvConstraints& c) {
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    bool is_command = false;
    try {
      parse_command(s.description);
      is_command = true;
    } catch (const Error&) {
    }
    if (is_command) {
      return {PlanRule::execution_detail,
              "step " + std::to_string(i + 1) + " is a command: '" + s.description + "'"};
    }
  }
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    if (s.target && !world.has_waypoint(*s.target)) {
      return {PlanRule::unresolved_target,
              "step " + std::to_string(i + 1) + " names '" + *s.target + "'"};
    }
  }
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto n = lexicon::action_sequence(lexicon::parse_instruction(plan.steps[i].description)).size();
    if (n > c.l_max) {
      return {PlanRule::over_length, "step " + std::to_string(i + 1) + " packs " +
                                         std::to_string(n) + " actions"};
    }
  }
  std::map<std::string, int> wanted, planned;
  try {
    for (const auto& a : lexicon::resolve_actions(lexicon::parse_instruction(instruction), world)) {
      if (a.target) ++wanted[*a.target];
    }
  } catch (const Error&) {
    return {};
  }
  for (const auto& s : plan.steps) {
    if (s.target) ++planned[*s.target];
  }
  for (const auto& [t, n] : wanted) {
    if (!planned.count(t)) return {PlanRule::missing_target, "no step covers '" + t + "'"};
  }
  for (const auto& [t, n] : planned) {
    if (n > std::max(1, wanted[t])) {
      return {PlanRule::duplicate_target, "'" + t + "' planned " + std::to_string(n) + " times"};
    }
  }
  return {};
}

FailureMemory record_failure(const TaskRequest& req, const Plan& failed, PlanRule rule,
                             FailureMemory mem) {
  FailureEntry e;
  e.request = req.instruction;
  e.plan_summary = summarize_plan(failed);
  e.rule = rule;
  e.digest = fnv1a_hex(req.scene + "\n" + req.instruction + "\n" + std::string(to_string(rule)));
  mem.add(std::move(e));
  return mem;
}

}  // namespace aerotask
