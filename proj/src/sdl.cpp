#include "btrisk/sdl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <set>

#include <json.hpp>

#include "btrisk/errors.hpp"
#include "btrisk/random.hpp"

namespace btrisk::sdl {

Value Value::make_integer(std::int64_t v) {
  Value out;
  out.kind = Kind::integer;
  out.integer = v;
  return out;
}

Value Value::make_real(double v) {
  Value out;
  out.kind = Kind::real;
  out.real = v;
  return out;
}

Value Value::make_string(std::string v) {
  Value out;
  out.kind = Kind::string;
  out.text = std::move(v);
  return out;
}

const Value* Value::arg(const std::string& name) const {
  for (const auto& [k, v] : args)
    if (k == name) return &v;
  return nullptr;
}

const FieldDecl* EntityDecl::field(const std::string& n) const {
  for (const auto& f : fields)
    if (f.name == n) return &f;
  return nullptr;
}

const EntityDecl* SceneModel::entity(const std::string& n) const {
  for (const auto& e : entities)
    if (e.name == n) return &e;
  return nullptr;
}

bool is_distribution_entity(const std::string& name) { return name == "uniform" || name == "choice"; }

namespace {

struct Pos {
  std::size_t line = 1;
  std::size_t column = 1;
};

struct Token {
  enum class Kind { ident, integer, real, string, punct, end };
  Kind kind = Kind::end;
  std::string text;
  std::int64_t integer = 0;
  double real = 0.0;
  Pos pos;
};

[[noreturn]] void error_at(const Pos& p, const std::string& msg) { throw ParseError("sdl: " + msg, p.line, p.column); }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.pos = pos_;
    if (i_ >= src_.size()) return t;
    const char c = src_[i_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i_;
      while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) advance();
      t.kind = Token::Kind::ident;
      t.text = std::string(src_.substr(start, i_ - start));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || ((c == '-' || c == '+' || c == '.') && i_ + 1 < src_.size() &&
                                                        (std::isdigit(static_cast<unsigned char>(src_[i_ + 1])) ||
                                                         (src_[i_ + 1] == '.' && c != '.')))) {
      return number(t);
    }
    if (c == '"') return string(t);
    if (std::string_view("{}():.=,[]").find(c) != std::string_view::npos) {
      advance();
      t.kind = Token::Kind::punct;
      t.text = std::string(1, c);
      return t;
    }
    error_at(pos_, std::string("unexpected character '") + c + "'");
  }

 private:
  void advance() {
    if (src_[i_] == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    ++i_;
  }

  void skip_space() {
    while (i_ < src_.size()) {
      const char c = src_[i_];
      if (c == '#') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token number(Token& t) {
    const std::size_t start = i_;
    bool real = false;
    if (src_[i_] == '-' || src_[i_] == '+') advance();
    while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
    if (i_ < src_.size() && src_[i_] == '.') {
      real = true;
      advance();
      while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
    }
    if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
      real = true;
      advance();
      if (i_ < src_.size() && (src_[i_] == '-' || src_[i_] == '+')) advance();
      if (i_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[i_]))) error_at(pos_, "malformed exponent");
      while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
    }
    std::string_view text = src_.substr(start, i_ - start);
    t.text = std::string(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (real) {
      t.kind = Token::Kind::real;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), t.real);
      if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(t.real))
        error_at(t.pos, "invalid number '" + t.text + "'");
    } else {
      t.kind = Token::Kind::integer;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), t.integer);
      if (ec != std::errc() || p != text.data() + text.size()) error_at(t.pos, "invalid integer '" + t.text + "'");
    }
    return t;
  }

  Token string(Token& t) {
    advance();
    std::string out;
    while (true) {
      if (i_ >= src_.size() || src_[i_] == '\n') error_at(t.pos, "unterminated string");
      char c = src_[i_];
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (i_ >= src_.size()) error_at(t.pos, "unterminated string");
        const char e = src_[i_];
        advance();
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: error_at(pos_, std::string("unknown escape '\\") + e + "'");
        }
      }
      out.push_back(c);
    }
    t.kind = Token::Kind::string;
    t.text = std::move(out);
    return t;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  Pos pos_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { tok_ = lex_.next(); }

  SceneModel run() {
    SceneModel m;
    expect_keyword("scene");
    m.name = expect_ident("scene name").text;
    expect_punct("{");
    while (!is_punct("}")) {
      if (tok_.kind == Token::Kind::end) error_at(tok_.pos, "missing '}' at end of scene");
      if (is_keyword("type")) {
        const Token kw = take();
        const Token name = expect_ident("type name");
        if (declared_.count(name.text)) error_at(name.pos, "duplicate declaration '" + name.text + "'");
        declared_.insert(name.text);
        m.types.push_back(name.text);
        (void)kw;
      } else if (is_keyword("entity")) {
        take();
        m.entities.push_back(entity());
      } else if (is_keyword("instance")) {
        if (m.has_instance) error_at(tok_.pos, "duplicate instance block");
        take();
        m.has_instance = true;
        instance(m);
      } else {
        error_at(tok_.pos, "expected 'type', 'entity', 'instance' or '}' but found '" + tok_.text + "'");
      }
    }
    take();
    if (tok_.kind != Token::Kind::end) error_at(tok_.pos, "unexpected text after the scene");
    check(m);
    return m;
  }

 private:
  struct TypeRef {
    std::string entity;
    std::string field;
    std::string type;
    Pos pos;
  };
  struct AssignRef {
    std::size_t index;
    Pos pos;
  };

  Token take() {
    Token t = tok_;
    tok_ = lex_.next();
    return t;
  }
  bool is_punct(const char* p) const { return tok_.kind == Token::Kind::punct && tok_.text == p; }
  bool is_keyword(const char* k) const { return tok_.kind == Token::Kind::ident && tok_.text == k; }

  void expect_punct(const char* p) {
    if (!is_punct(p)) error_at(tok_.pos, std::string("expected '") + p + "'" + found());
    take();
  }
  void expect_keyword(const char* k) {
    if (!is_keyword(k)) error_at(tok_.pos, std::string("expected '") + k + "'" + found());
    take();
  }
  Token expect_ident(const char* what) {
    if (tok_.kind != Token::Kind::ident) error_at(tok_.pos, std::string("expected ") + what + found());
    return take();
  }
  std::string found() const {
    return tok_.kind == Token::Kind::end ? " but reached end of input" : " but found '" + tok_.text + "'";
  }

  EntityDecl entity() {
    EntityDecl e;
    const Token name = expect_ident("entity name");
    if (declared_.count(name.text)) error_at(name.pos, "duplicate declaration '" + name.text + "'");
    declared_.insert(name.text);
    e.name = name.text;
    expect_punct("{");
    while (!is_punct("}")) {
      const Token field = expect_ident("field name");
      if (e.field(field.text)) error_at(field.pos, "duplicate field '" + field.text + "' in entity '" + e.name + "'");
      expect_punct(":");
      const Token type = expect_ident("field type");
      e.fields.push_back({field.text, type.text});
      type_refs_.push_back({e.name, field.text, type.text, type.pos});
    }
    take();
    return e;
  }

  void instance(SceneModel& m) {
    expect_punct("{");
    while (!is_punct("}")) {
      const Token entity = expect_ident("entity name");
      expect_punct(".");
      const Token field = expect_ident("field name");
      expect_punct("=");
      assign_refs_.push_back({m.instance.size(), entity.pos});
      m.instance.push_back({entity.text, field.text, value()});
    }
    take();
  }

  Value value() {
    const Token t = take();
    switch (t.kind) {
      case Token::Kind::integer: return Value::make_integer(t.integer);
      case Token::Kind::real: return Value::make_real(t.real);
      case Token::Kind::string: return Value::make_string(t.text);
      case Token::Kind::punct:
        if (t.text == "[") {
          Value list;
          list.kind = Value::Kind::list;
          if (!is_punct("]")) {
            list.items.push_back(value());
            while (is_punct(",")) {
              take();
              list.items.push_back(value());
            }
          }
          expect_punct("]");
          return list;
        }
        break;
      case Token::Kind::ident: {
        Value call;
        call.kind = Value::Kind::call;
        call.text = t.text;
        expect_punct("(");
        if (!is_punct(")")) {
          while (true) {
            const Token name = expect_ident("argument name");
            if (call.arg(name.text)) error_at(name.pos, "duplicate argument '" + name.text + "'");
            expect_punct("=");
            call.args.emplace_back(name.text, value());
            if (!is_punct(",")) break;
            take();
          }
        }
        expect_punct(")");
        return call;
      }
      case Token::Kind::end: break;
    }
    error_at(t.pos, "expected a value" + (t.kind == Token::Kind::end ? std::string(" but reached end of input")
                                                                      : " but found '" + t.text + "'"));
  }

  static bool is_real_type(const std::string& t) { return t == "real" || t == "float" || t == "double"; }

  // Literal type check against a primitive type name.
  static bool fits(const Value& v, const std::string& type) {
    if (type == "int") return v.kind == Value::Kind::integer;
    if (is_real_type(type)) return v.is_number();
    if (type == "string") return v.kind == Value::Kind::string;
    if (type == "list") return v.kind == Value::Kind::list;
    return v.kind != Value::Kind::list && v.kind != Value::Kind::call;
  }

  void check(const SceneModel& m) {
    const std::set<std::string> primitives(m.types.begin(), m.types.end());
    for (const auto& ref : type_refs_) {
      if (primitives.count(ref.type)) continue;
      const EntityDecl* target = m.entity(ref.type);
      if (!target) error_at(ref.pos, "unknown type '" + ref.type + "' for field '" + ref.entity + "." + ref.field + "'");
      if (!is_distribution_entity(ref.type))
        error_at(ref.pos, "entity '" + ref.type + "' used as a field type is not a distribution (uniform, choice)");
      if (is_distribution_entity(ref.entity))
        error_at(ref.pos, "distribution entity '" + ref.entity + "' may only have primitive fields");
    }
    for (const auto& e : m.entities) {
      if (e.name == "uniform" && (!e.field("low") || !e.field("high") || e.fields.size() != 2))
        error_at({}, "entity 'uniform' must declare exactly the fields low and high");
      if (e.name == "choice" && (!e.field("values") || e.fields.size() != 1))
        error_at({}, "entity 'choice' must declare exactly the field values");
    }

    std::set<std::pair<std::string, std::string>> assigned;
    for (const auto& ref : assign_refs_) {
      const Assignment& a = m.instance[ref.index];
      const EntityDecl* e = m.entity(a.entity);
      if (!e) error_at(ref.pos, "unknown entity '" + a.entity + "'");
      if (is_distribution_entity(e->name)) error_at(ref.pos, "cannot instantiate distribution entity '" + e->name + "'");
      const FieldDecl* f = e->field(a.field);
      if (!f) error_at(ref.pos, "entity '" + a.entity + "' has no field '" + a.field + "'");
      if (!assigned.insert({a.entity, a.field}).second)
        error_at(ref.pos, "duplicate value for '" + a.entity + "." + a.field + "'");

      const EntityDecl* dist = m.entity(f->type);
      if (!dist) {
        if (a.value.kind == Value::Kind::list)
          error_at(ref.pos, "list values are only allowed as distribution arguments");
        if (!fits(a.value, f->type))
          error_at(ref.pos, "value for '" + a.entity + "." + a.field + "' does not match type '" + f->type + "'");
        continue;
      }
      if (a.value.kind != Value::Kind::call || a.value.text != dist->name)
        error_at(ref.pos, "field '" + a.entity + "." + a.field + "' needs a " + dist->name + "(...) value");
      for (const auto& [arg, v] : a.value.args) {
        const FieldDecl* param = dist->field(arg);
        if (!param) error_at(ref.pos, dist->name + " has no parameter '" + arg + "'");
        if (!fits(v, param->type))
          error_at(ref.pos, "argument '" + arg + "' of " + dist->name + " does not match type '" + param->type + "'");
        if (v.kind == Value::Kind::list)
          for (const auto& item : v.items)
            if (item.kind == Value::Kind::list || item.kind == Value::Kind::call)
              error_at(ref.pos, "choice values must be numbers or strings");
      }
      for (const auto& param : dist->fields)
        if (!a.value.arg(param.name))
          error_at(ref.pos, dist->name + " for '" + a.entity + "." + a.field + "' is missing '" + param.name + "'");
    }

    if (!m.has_instance) return;
    for (const auto& e : m.entities) {
      if (is_distribution_entity(e.name)) continue;
      for (const auto& f : e.fields)
        if (m.entity(f.type) && !assigned.count({e.name, f.name}))
          error_at({}, "missing instance value for distribution field '" + e.name + "." + f.name + "'");
    }
  }

  Lexer lex_;
  Token tok_;
  std::set<std::string> declared_;
  std::vector<TypeRef> type_refs_;
  std::vector<AssignRef> assign_refs_;
};

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string print_value(const Value& v) {
  switch (v.kind) {
    case Value::Kind::integer: return std::to_string(v.integer);
    case Value::Kind::real: return format_real(v.real);
    case Value::Kind::string: return quote(v.text);
    case Value::Kind::list: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) out += (i ? ", " : "") + print_value(v.items[i]);
      return out + "]";
    }
    case Value::Kind::call: {
      std::string out = v.text + "(";
      for (std::size_t i = 0; i < v.args.size(); ++i)
        out += (i ? ", " : "") + v.args[i].first + "=" + print_value(v.args[i].second);
      return out + ")";
    }
  }
  return {};
}

ConfigValue scalar(const Value& v) {
  switch (v.kind) {
    case Value::Kind::integer: return v.integer;
    case Value::Kind::real: return v.real;
    case Value::Kind::string: return v.text;
    default: throw DomainError("sdl: value is not a scalar");
  }
}

struct Plan {
  std::string key;
  const Assignment* assignment;
  bool integer_uniform = false;
};

std::vector<Plan> sampling_plan(const SceneModel& model) {
  if (!model.has_instance) throw DomainError("sdl: scene '" + model.name + "' has no instance block to sample");
  std::vector<Plan> plan;
  for (const auto& a : model.instance) {
    Plan p{a.entity + "." + a.field, &a, false};
    if (a.value.kind == Value::Kind::call && a.value.text == "uniform") {
      const EntityDecl* u = model.entity("uniform");
      p.integer_uniform = u && u->field("low")->type == "int" && u->field("high")->type == "int";
    }
    plan.push_back(std::move(p));
  }
  std::sort(plan.begin(), plan.end(), [](const Plan& a, const Plan& b) { return a.key < b.key; });
  return plan;
}

SceneConfig sample_with_plan(const SceneModel& model, const std::vector<Plan>& plan, std::uint64_t seed,
                             std::uint64_t index) {
  SceneConfig cfg;
  cfg.model_name = model.name;
  cfg.seed = seed;
  cfg.index = index;
  Rng rng(seed, index);
  for (const auto& p : plan) {
    const Value& v = p.assignment->value;
    if (v.kind != Value::Kind::call) {
      cfg.values[p.key] = scalar(v);
      continue;
    }
    if (v.text == "uniform") {
      const Value& low = *v.arg("low");
      const Value& high = *v.arg("high");
      if (low.number() > high.number())
        throw DomainError("sdl: uniform for '" + p.key + "' has low > high");
      if (p.integer_uniform) {
        cfg.values[p.key] = rng.uniform_int(low.integer, high.integer);
      } else if (low.number() == high.number()) {
        cfg.values[p.key] = low.number();
      } else {
        cfg.values[p.key] = rng.uniform(low.number(), high.number());
      }
    } else {
      const auto& items = v.arg("values")->items;
      if (items.empty()) throw DomainError("sdl: choice for '" + p.key + "' has no values");
      const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(items.size()) - 1);
      cfg.values[p.key] = scalar(items[static_cast<std::size_t>(pick)]);
    }
  }
  return cfg;
}

}  // namespace

SceneModel parse(std::string_view source) { return Parser(source).run(); }

std::string print(const SceneModel& model) {
  std::string out = "scene " + model.name + " {\n";
  for (const auto& t : model.types) out += "    type " + t + "\n";
  for (const auto& e : model.entities) {
    out += "    entity " + e.name + " {\n";
    for (const auto& f : e.fields) out += "        " + f.name + ": " + f.type + "\n";
    out += "    }\n";
  }
  if (model.has_instance) {
    out += "    instance {\n";
    for (const auto& a : model.instance) out += "        " + a.entity + "." + a.field + " = " + print_value(a.value) + "\n";
    out += "    }\n";
  }
  return out + "}\n";
}

SceneConfig sample_one(const SceneModel& model, std::uint64_t seed, std::uint64_t index) {
  return sample_with_plan(model, sampling_plan(model), seed, index);
}

std::vector<SceneConfig> sample_serial(const SceneModel& model, std::size_t count, std::uint64_t seed) {
  const auto plan = sampling_plan(model);
  std::vector<SceneConfig> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_with_plan(model, plan, seed, i));
  return out;
}

std::vector<SceneConfig> sample(const SceneModel& model, std::size_t count, std::uint64_t seed) {
  const auto plan = sampling_plan(model);
  std::vector<SceneConfig> out(count);
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = sample_with_plan(model, plan, seed, static_cast<std::uint64_t>(i));
    } catch (...) {
#pragma omp critical(btrisk_sdl_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string to_json_line(const SceneConfig& config) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [k, v] : config.values) std::visit([&](const auto& x) { values[k] = x; }, v);
  nlohmann::json j;
  j["scene"] = config.model_name;
  j["seed"] = config.seed;
  j["index"] = config.index;
  j["values"] = std::move(values);
  return j.dump();
}

}  // namespace btrisk::sdl
