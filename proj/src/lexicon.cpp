#include "aerotask/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "aerotask/error.hpp"
#include "aerotask/world.hpp"

namespace aerotask::lexicon {

namespace {

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words{
      "a", "an", "the", "and", "or", "but", "then", "also", "so", "to", "of", "for", "in",
      "into", "on", "onto", "at", "by", "with", "from", "as", "about", "over", "under",
      "through", "toward", "towards", "near", "after", "before", "while", "during", "along",
      "until", "i", "me", "my", "mine", "we", "us", "our", "you", "your", "it", "its", "this",
      "that", "these", "those", "there", "here", "he", "she", "they", "them", "is", "are",
      "was", "were", "be", "been", "being", "am", "do", "does", "did", "dont", "doesnt", "not",
      "no", "can", "could", "would", "should", "will", "shall", "may", "might", "must",
      "please", "now", "first", "next", "finally", "again", "just", "some", "any", "each",
      "every", "all", "both", "one", "two", "three", "four", "five", "six", "seven", "eight",
      "nine", "ten", "meter", "meters", "metre", "metres", "m", "second", "seconds", "sec",
      "secs", "s", "degree", "degrees", "deg", "let", "lets", "what", "which", "who", "how",
      "when", "if", "than", "very", "too", "way", "more", "much", "many", "other", "another",
      "same", "yourself", "thanks", "thank", "once", "done",
  };
  return words;
}

const std::unordered_map<std::string_view, std::string_view>& lemma_table() {
  static const std::unordered_map<std::string_view, std::string_view> table{
      {"took", "take"}, {"taken", "take"}, {"taking", "take"}, {"takes", "take"},
      {"flew", "fly"}, {"flown", "fly"}, {"flying", "fly"}, {"flies", "fly"},
      {"went", "go"}, {"gone", "go"}, {"going", "go"}, {"goes", "go"},
      {"moving", "move"}, {"moved", "move"}, {"moves", "move"},
      {"landing", "land"}, {"landed", "land"}, {"lands", "land"},
      {"hovering", "hover"}, {"hovered", "hover"}, {"hovers", "hover"},
      {"rotating", "rotate"}, {"rotated", "rotate"}, {"rotates", "rotate"},
      {"turning", "turn"}, {"turned", "turn"}, {"turns", "turn"},
      {"avoiding", "avoid"}, {"avoided", "avoid"}, {"avoids", "avoid"},
      {"dodging", "dodge"}, {"dodged", "dodge"}, {"dodges", "dodge"},
      {"capturing", "capture"}, {"captured", "capture"}, {"captures", "capture"},
      {"photographing", "photograph"}, {"photographed", "photograph"},
      {"inspecting", "inspect"}, {"inspected", "inspect"},
      {"checking", "check"}, {"checked", "check"},
      {"searching", "search"}, {"searched", "search"}, {"searches", "search"},
      {"exploring", "explore"}, {"explored", "explore"},
      {"returning", "return"}, {"returned", "return"},
      {"ascending", "ascend"}, {"descending", "descend"}, {"climbing", "climb"},
      {"waiting", "wait"}, {"visiting", "visit"}, {"heading", "head"},
      {"tracking", "track"}, {"following", "follow"}, {"snapping", "snap"},
      {"forwards", "forward"}, {"backward", "back"}, {"backwards", "back"},
      {"upward", "up"}, {"upwards", "up"}, {"downward", "down"}, {"downwards", "down"},
      {"anticlockwise", "counterclockwise"}, {"pics", "pic"}, {"shelves", "shelf"},
      {"takeoff", "takeoff"}, {"glasses", "glass"}, {"stairs", "stair"},
  };
  return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

const std::unordered_map<std::string_view, int>& count_words() {
  static const std::unordered_map<std::string_view, int> words{
      {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5},
      {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10},
      {"both", 2}, {"all", -1}, {"every", -1},
  };
  return words;
}

const std::unordered_set<std::string_view> kArticles{"the", "a", "an", "my", "our", "your"};
const std::unordered_set<std::string_view> kPhotoNouns{"picture", "photo", "photograph",
                                                       "snapshot", "image", "shot", "pic"};
const std::unordered_set<std::string_view> kDistanceUnits{"meter", "meters", "metre",
                                                          "metres", "m"};
const std::unordered_set<std::string_view> kTimeUnits{"second", "seconds", "sec", "secs", "s"};
const std::unordered_set<std::string_view> kAngleUnits{"degree", "degrees", "deg"};
const std::unordered_set<std::string_view> kPrepositions{
    "in", "on", "at", "of", "for", "with", "to", "near", "by", "from", "while", "without",
    "before", "after", "along", "during", "into", "inside", "toward", "towards", "around"};
const std::unordered_set<std::string_view> kConjunctions{"and", "or", "then", "also"};

const std::unordered_set<std::string_view> kMoveVerbs{"move", "fly", "go", "head", "travel",
                                                      "proceed", "navigate", "advance"};
const std::unordered_set<std::string_view> kHoverVerbs{"hover", "wait", "hold", "stay", "pause"};
const std::unordered_set<std::string_view> kTurnVerbs{"turn", "rotate", "yaw", "spin"};
const std::unordered_set<std::string_view> kAscendVerbs{"ascend", "climb", "rise"};
const std::unordered_set<std::string_view> kDescendVerbs{"descend", "lower", "drop"};
const std::unordered_set<std::string_view> kTakeVerbs{"take", "snap", "shoot", "grab"};
const std::unordered_set<std::string_view> kCaptureVerbs{"photograph", "capture"};
const std::unordered_set<std::string_view> kInspectVerbs{"inspect", "check", "examine",
                                                         "survey"};
const std::unordered_set<std::string_view> kSearchVerbs{"search", "explore", "find", "locate",
                                                        "scan"};
const std::unordered_set<std::string_view> kAvoidVerbs{"avoid", "dodge", "bypass"};
const std::unordered_set<std::string_view> kTrackVerbs{"track", "follow"};
const std::unordered_set<std::string_view> kOtherVerbs{"land",  "takeoff", "launch", "return",
                                                       "visit", "look"};

bool is_verb_start(const Token& t) {
  const std::string_view l = t.lemma;
  for (const auto* set : {&kMoveVerbs, &kHoverVerbs, &kTurnVerbs, &kAscendVerbs, &kDescendVerbs,
                          &kTakeVerbs, &kCaptureVerbs, &kInspectVerbs, &kSearchVerbs,
                          &kAvoidVerbs, &kTrackVerbs, &kOtherVerbs}) {
    if (set->contains(l)) return true;
  }
  return false;
}

std::optional<Direction> direction_word(std::string_view lemma) {
  if (lemma == "forward" || lemma == "ahead" || lemma == "straight") return Direction::forward;
  if (lemma == "back") return Direction::back;
  if (lemma == "left") return Direction::left;
  if (lemma == "right") return Direction::right;
  if (lemma == "up") return Direction::up;
  if (lemma == "down") return Direction::down;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : t_(std::move(tokens)) {}

  ParsedInstruction run() {
    while (i_ < t_.size()) {
      if (!step()) ++i_;
    }
    return std::move(out_);
  }

 private:
  bool at_end() const { return i_ >= t_.size(); }
  const Token& cur() const { return t_[i_]; }
  bool lemma_is(std::size_t at, std::string_view w) const {
    return at < t_.size() && t_[at].lemma == w;
  }
  bool clause_break(std::size_t at) const {
    if (at >= t_.size()) return true;
    const Token& t = t_[at];
    return t.is_separator || kConjunctions.contains(t.lemma) || is_verb_start(t);
  }

  void push(ActionKind kind, std::optional<TargetPhrase> target = std::nullopt,
            std::optional<double> amount = std::nullopt, Direction dir = Direction::forward) {
    Action a;
    a.kind = kind;
    a.target = std::move(target);
    a.amount = amount;
    a.direction = dir;
    out_.actions.push_back(std::move(a));
  }

  // Parses "[the] [count] noun... [number]" items joined by "," / "and".
  std::vector<TargetPhrase> target_list() {
    std::vector<TargetPhrase> targets;
    while (!at_end()) {
      std::size_t j = i_;
      while (j < t_.size() && kArticles.contains(t_[j].lemma)) ++j;
      int count = 1;
      if (j < t_.size() && count_words().contains(t_[j].lemma)) {
        count = count_words().at(t_[j].lemma);
        ++j;
      }
      std::string phrase;
      while (j < t_.size()) {
        const Token& t = t_[j];
        if (t.is_separator || t.is_number || kConjunctions.contains(t.lemma) ||
            kPrepositions.contains(t.lemma) || is_verb_start(t) || is_stopword(t.lemma) ||
            kPhotoNouns.contains(t.lemma)) {
          break;
        }
        if (!phrase.empty()) phrase += ' ';
        phrase += t.lemma;
        ++j;
      }
      if (phrase.empty()) break;
      if (j < t_.size() && t_[j].is_number && count == 1) {
        phrase += ' ' + t_[j].text;
        ++j;
      }
      targets.push_back({phrase, count});
      out_.targets.push_back(targets.back());
      i_ = j;
      // Continue across "," / "and" only when another noun phrase follows.
      std::size_t k = i_;
      while (k < t_.size() && (t_[k].is_separator && t_[k].text == ",")) ++k;
      while (k < t_.size() && (t_[k].lemma == "and" || t_[k].lemma == "or")) ++k;
      while (k < t_.size() && t_[k].is_separator && t_[k].text == ",") ++k;
      if (k == i_ || clause_break(k) || lemma_is(k, "then")) break;
      i_ = k;
    }
    return targets;
  }

  std::optional<double> number_with(const std::unordered_set<std::string_view>& units,
                                    std::size_t window, std::size_t* consumed_to = nullptr) {
    for (std::size_t j = i_; j < t_.size() && j < i_ + window; ++j) {
      if (clause_break(j) && !(t_[j].is_separator && false)) {
        if (j != i_ || !t_[j].is_number) break;
      }
      if (t_[j].is_number) {
        if (consumed_to) {
          *consumed_to = j + 1;
          if (j + 1 < t_.size() && units.contains(t_[j + 1].text)) *consumed_to = j + 2;
        }
        return t_[j].value;
      }
    }
    return std::nullopt;
  }

  void skip_to(std::size_t j) { i_ = std::max(i_, j); }

  void parse_move_tail() {
    // i_ points just past the motion verb.
    std::optional<Direction> dir;
    std::optional<double> meters;
    std::size_t j = i_;
    for (; j < t_.size() && j < i_ + 5; ++j) {
      const Token& t = t_[j];
      if (t.is_number && !meters) {
        meters = t.value;
        continue;
      }
      if (kDistanceUnits.contains(t.text) || t.lemma == "by") continue;
      if (auto d = direction_word(t.lemma); d && !dir) {
        if (*d == Direction::back && (lemma_is(j + 1, "to") || lemma_is(j + 1, "home"))) break;
        dir = d;
        continue;
      }
      break;
    }
    if (dir) {
      push(ActionKind::move, std::nullopt, meters.value_or(kDefaultMoveMeters), *dir);
      skip_to(j);
      return;
    }
    // "go to X", "fly into X", "head back to X", "go home".
    std::size_t k = i_;
    if (lemma_is(k, "back")) ++k;
    if (lemma_is(k, "home")) {
      push(ActionKind::go_to, TargetPhrase{"home", 1});
      i_ = k + 1;
      return;
    }
    if (lemma_is(k, "over")) ++k;
    if (lemma_is(k, "to") || lemma_is(k, "into") || lemma_is(k, "toward") ||
        lemma_is(k, "towards") || lemma_is(k, "inside")) {
      i_ = k + 1;
      for (auto& target : target_list()) push(ActionKind::go_to, target);
    }
  }

  bool step() {
    const Token& t = cur();
    if (t.is_separator) return false;
    const std::string_view w = t.lemma;

    if ((w == "take" || w == "lift") && lemma_is(i_ + 1, "off")) {
      push(ActionKind::takeoff);
      i_ += 2;
      return true;
    }
    if (w == "takeoff" || w == "launch") {
      push(ActionKind::takeoff);
      ++i_;
      return true;
    }
    if (w == "land" || (w == "touch" && lemma_is(i_ + 1, "down"))) {
      push(ActionKind::land);
      i_ += w == "land" ? 1 : 2;
      return true;
    }
    if (kHoverVerbs.contains(w)) {
      ++i_;
      std::size_t to = i_;
      std::optional<double> secs;
      for (std::size_t j = i_; j < t_.size() && j < i_ + 4; ++j) {
        if (t_[j].is_number) {
          secs = t_[j].value;
          to = j + 1;
          if (j + 1 < t_.size() && kTimeUnits.contains(t_[j + 1].text)) to = j + 2;
          break;
        }
        if (t_[j].is_separator || is_verb_start(t_[j]) || kConjunctions.contains(t_[j].lemma)) {
          break;
        }
      }
      push(ActionKind::hover, std::nullopt, secs.value_or(kDefaultHoverSeconds));
      skip_to(to);
      return true;
    }
    if (kTurnVerbs.contains(w)) {
      ++i_;
      double sign = 1.0;
      std::optional<double> degrees;
      bool around = false;
      std::size_t j = i_;
      for (; j < t_.size() && j < i_ + 6; ++j) {
        const Token& a = t_[j];
        if (a.is_separator || kConjunctions.contains(a.lemma) || is_verb_start(a)) break;
        if (a.is_number) {
          degrees = a.value;
        } else if (a.lemma == "right" || a.lemma == "clockwise") {
          sign = -1.0;
        } else if (a.lemma == "left" || a.lemma == "counterclockwise") {
          sign = 1.0;
        } else if (a.lemma == "around") {
          around = true;
        }
      }
      double amount = degrees.value_or(around ? 180.0 : kDefaultTurnDegrees);
      push(ActionKind::rotate, std::nullopt, sign * amount);
      skip_to(j);
      return true;
    }
    if (kAscendVerbs.contains(w) || kDescendVerbs.contains(w)) {
      Direction dir = kAscendVerbs.contains(w) ? Direction::up : Direction::down;
      ++i_;
      std::size_t to = i_;
      auto meters = number_with(kDistanceUnits, 3, &to);
      push(ActionKind::move, std::nullopt, meters.value_or(kDefaultMoveMeters), dir);
      skip_to(to);
      return true;
    }
    if (kMoveVerbs.contains(w)) {
      ++i_;
      parse_move_tail();
      return true;
    }
    if (w == "return" || (w == "come" && lemma_is(i_ + 1, "back"))) {
      i_ += w == "return" ? 1 : 2;
      if (lemma_is(i_, "to") && !lemma_is(i_ + 1, "home")) {
        ++i_;
        auto targets = target_list();
        if (!targets.empty()) {
          for (auto& target : targets) push(ActionKind::go_to, target);
          return true;
        }
      }
      if (lemma_is(i_, "to")) ++i_;
      if (lemma_is(i_, "home")) ++i_;
      push(ActionKind::go_to, TargetPhrase{"home", 1});
      return true;
    }
    if (w == "visit") {
      ++i_;
      for (auto& target : target_list()) push(ActionKind::go_to, target);
      return true;
    }
    if (kTakeVerbs.contains(w) || kCaptureVerbs.contains(w)) {
      // take [a|two|some] picture(s) [of|for|at] targets
      std::size_t j = i_ + 1;
      int count = 1;
      while (j < t_.size() && j < i_ + 4 && !kPhotoNouns.contains(t_[j].lemma)) {
        if (count_words().contains(t_[j].lemma)) count = std::max(1, count_words().at(t_[j].lemma));
        if (t_[j].is_number) count = std::max(1, static_cast<int>(t_[j].value));
        if (!(kArticles.contains(t_[j].lemma) || count_words().contains(t_[j].lemma) ||
              t_[j].is_number || t_[j].lemma == "some" || t_[j].lemma == "few")) {
          break;
        }
        ++j;
      }
      bool has_noun = j < t_.size() && kPhotoNouns.contains(t_[j].lemma);
      if (!has_noun && kTakeVerbs.contains(w)) return false;
      i_ = has_noun ? j + 1 : i_ + 1;
      if (lemma_is(i_, "of") || lemma_is(i_, "for") || lemma_is(i_, "at") ||
          lemma_is(i_, "in")) {
        ++i_;
      }
      auto targets = target_list();
      if (targets.empty()) {
        for (int n = 0; n < count; ++n) push(ActionKind::capture);
      } else {
        for (auto& target : targets) push(ActionKind::capture, target);
      }
      return true;
    }
    if (kInspectVerbs.contains(w)) {
      ++i_;
      if (lemma_is(i_, "on") || lemma_is(i_, "out")) ++i_;
      for (auto& target : target_list()) push(ActionKind::capture, target);
      return true;
    }
    if (kSearchVerbs.contains(w) || (w == "look" && lemma_is(i_ + 1, "for"))) {
      i_ += w == "look" ? 2 : 1;
      if (lemma_is(i_, "for") || lemma_is(i_, "around")) ++i_;
      auto targets = target_list();
      if (targets.empty()) {
        push(ActionKind::search);
      } else {
        for (auto& target : targets) push(ActionKind::search, target);
      }
      return true;
    }
    if (kAvoidVerbs.contains(w)) {
      push(ActionKind::avoid);
      ++i_;
      return true;
    }
    if (kTrackVerbs.contains(w)) {
      ++i_;
      auto targets = target_list();
      push(ActionKind::track, targets.empty() ? std::nullopt
                                               : std::optional<TargetPhrase>(targets.front()));
      return true;
    }
    return false;
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
  ParsedInstruction out_;
};

}  // namespace

bool is_stopword(std::string_view word) { return stopwords().contains(word); }

std::string lemmatize(std::string_view word) {
  if (auto it = lemma_table().find(word); it != lemma_table().end()) {
    return std::string(it->second);
  }
  std::string w(word);
  if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 4 && (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes") ||
                       ends_with(w, "sses"))) {
    return w.substr(0, w.size() - 2);
  }
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
      !ends_with(w, "is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto flush_word = [&](std::string& w) {
    if (w.empty()) return;
    Token t;
    t.text = w;
    t.lemma = lemmatize(w);
    out.push_back(std::move(t));
    w.clear();
  };
  std::string word;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isdigit(c) && word.empty()) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j + 1 < text.size() && text[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      }
      Token t;
      t.text = std::string(text.substr(i, j - i));
      t.lemma = t.text;
      t.is_number = true;
      std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
      out.push_back(std::move(t));
      i = j;
      continue;
    }
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'') {
      // dropped: "don't" -> "dont"
    } else {
      flush_word(word);
      if (c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?') {
        Token t;
        t.text = std::string(1, static_cast<char>(c));
        t.lemma = t.text;
        t.is_separator = true;
        out.push_back(std::move(t));
      }
    }
    ++i;
  }
  flush_word(word);
  return out;
}

std::set<std::string> extract_keywords(std::string_view instruction) {
  std::set<std::string> keys;
  for (const auto& t : tokenize(instruction)) {
    if (t.is_number || t.is_separator) continue;
    if (is_stopword(t.text) || is_stopword(t.lemma)) continue;
    if (std::all_of(t.lemma.begin(), t.lemma.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      continue;
    }
    keys.insert(t.lemma);
  }
  return keys;
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::takeoff: return "takeoff";
    case ActionKind::land: return "land";
    case ActionKind::hover: return "hover";
    case ActionKind::move: return "move";
    case ActionKind::rotate: return "rotate";
    case ActionKind::capture: return "capture";
    case ActionKind::go_to: return "goto";
    case ActionKind::search: return "search";
    case ActionKind::avoid: return "avoid";
    case ActionKind::track: return "track";
  }
  return "?";
}

ParsedInstruction parse_instruction(std::string_view text) {
  return Parser(tokenize(text)).run();
}

std::vector<ActionKind> action_sequence(const ParsedInstruction& parsed) {
  std::vector<ActionKind> out;
  for (const auto& a : parsed.actions) {
    int n = a.target ? std::max(1, a.target->count) : 1;
    for (int k = 0; k < n; ++k) out.push_back(a.kind);
  }
  return out;
}

std::vector<ResolvedAction> resolve_actions(const ParsedInstruction& parsed,
                                            const WorldModel& world) {
  std::vector<ResolvedAction> out;
  for (const auto& a : parsed.actions) {
    ResolvedAction base;
    base.kind = a.kind;
    base.direction = a.direction;
    base.amount = a.amount.value_or(0.0);
    if (!a.target) {
      if (a.kind == ActionKind::search) {
        throw Error(Errc::AutonomousInstruction, "open-ended search has no computable target");
      }
      out.push_back(base);
      continue;
    }
    auto names = resolve_target_phrase(world, a.target->phrase, a.target->count);
    if (names.empty()) {
      if (a.kind == ActionKind::search) {
        throw Error(Errc::AutonomousInstruction,
                    "search target '" + a.target->phrase + "' is not a known scene entity");
      }
      throw Error(Errc::UnresolvableTarget,
                  "'" + a.target->phrase + "' (x" + std::to_string(a.target->count) +
                      ") is not in world '" + world.id + "'");
    }
    for (auto& name : names) {
      ResolvedAction r = base;
      if (r.kind == ActionKind::search) r.kind = ActionKind::capture;
      r.target = std::move(name);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace aerotask::lexicon
