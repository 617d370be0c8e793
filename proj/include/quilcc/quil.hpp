#pragma once
// Frontend for the Quil subset: instruction model, parser, emitter.
//
// Accepted instructions: DECLARE, RX, RZ, CZ, SWAP, MEASURE, LABEL, JUMP,
// JUMP-WHEN, JUMP-UNLESS, HALT, PRAGMA BRANCH_PROBABILITY. `#` starts a
// comment, labels are written `@name`, classical addresses `region[i]`.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace quilcc {

inline constexpr double kPi = 3.14159265358979323846;

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_no, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg),
        line(line_no) {}
};

struct MemRef {
  std::string region;
  int index = 0;
  bool operator==(const MemRef&) const = default;
  auto operator<=>(const MemRef&) const = default;
};

enum class GateKind { RX, RZ, CZ, SWAP };

inline const char* gate_name(GateKind g) {
  switch (g) {
    case GateKind::RX: return "RX";
    case GateKind::RZ: return "RZ";
    case GateKind::CZ: return "CZ";
    case GateKind::SWAP: return "SWAP";
  }
  return "?";
}

struct GateApp {
  GateKind gate;
  std::vector<double> params;  // one angle for RX/RZ, empty for CZ/SWAP
  std::vector<int> qubits;
};

struct Measure {
  int qubit;
  MemRef target;
};

struct LabelDef {
  std::string name;
};

struct Jump {
  std::string target;
};

enum class CondKind { When, Unless };

struct CondJump {
  CondKind kind;
  std::string target;
  MemRef condition;
  // Filled in from a preceding PRAGMA BRANCH_PROBABILITY, if any. This is the
  // probability that the branch is *taken*.
  std::optional<double> probability;
};

struct Halt {};

struct Declare {
  std::string name;
  int size = 1;
};

struct BranchProbPragma {
  double probability;
};

using Instruction = std::variant<GateApp, Measure, LabelDef, Jump, CondJump,
                                 Halt, Declare, BranchProbPragma>;

struct Program {
  std::vector<Instruction> instructions;
  std::vector<int> instruction_lines;  // source line per instruction
  // Declared classical regions in declaration order (name, size).
  std::vector<std::pair<std::string, int>> declared;
  std::string source_name = "<string>";

  int declared_size(std::string_view region) const {
    for (const auto& [name, size] : declared)
      if (name == region) return size;
    return -1;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

inline double parse_double(std::string_view s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(line, "malformed number '" + std::string(s) + "'");
  return v;
}

inline int parse_nonneg_int(std::string_view s, int line, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0)
    throw ParseError(line, std::string("malformed ") + what + " '" +
                               std::string(s) + "'");
  return v;
}

// Angles may be decimal literals or symbolic multiples of pi:
// pi, -pi, pi/2, 2*pi, -0.5*pi, pi/4, 3*pi/2, ...
inline double parse_angle(std::string_view s, int line) {
  s = trim(s);
  if (s.empty()) throw ParseError(line, "empty angle");
  double sign = 1.0;
  if (s.front() == '+' || s.front() == '-') {
    if (s.front() == '-') sign = -1.0;
    s.remove_prefix(1);
    s = trim(s);
  }
  auto star = s.find('*');
  double factor = 1.0;
  if (star != std::string_view::npos) {
    factor = parse_double(trim(s.substr(0, star)), line);
    s = trim(s.substr(star + 1));
  }
  if (s.rfind("pi", 0) == 0) {
    s.remove_prefix(2);
    double denom = 1.0;
    if (!s.empty()) {
      if (s.front() != '/')
        throw ParseError(line, "malformed angle");
      denom = parse_double(trim(s.substr(1)), line);
      if (denom == 0.0) throw ParseError(line, "division by zero in angle");
    }
    return sign * factor * kPi / denom;
  }
  if (star != std::string_view::npos)
    throw ParseError(line, "malformed angle");
  return sign * parse_double(s, line);
}

// "ro[3]" or bare "ro" (meaning index 0).
inline MemRef parse_memref(std::string_view s, int line) {
  auto bracket = s.find('[');
  if (bracket == std::string_view::npos) {
    if (!valid_name(s))
      throw ParseError(line, "malformed memory reference '" + std::string(s) + "'");
    return MemRef{std::string(s), 0};
  }
  if (s.back() != ']')
    throw ParseError(line, "malformed memory reference '" + std::string(s) + "'");
  std::string_view name = s.substr(0, bracket);
  std::string_view idx = s.substr(bracket + 1, s.size() - bracket - 2);
  if (!valid_name(name))
    throw ParseError(line, "malformed memory reference '" + std::string(s) + "'");
  return MemRef{std::string(name),
                parse_nonneg_int(idx, line, "memory index")};
}

inline std::string parse_label_ref(std::string_view s, int line) {
  if (s.size() < 2 || s[0] != '@' || !valid_name(s.substr(1)))
    throw ParseError(line, "malformed label '" + std::string(s) + "'");
  return std::string(s.substr(1));
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

// Emit the four symbolic angles by name so emitted programs stay readable;
// everything else as a shortest round-trip decimal.
inline std::string format_angle(double v) {
  constexpr double eps = 1e-15;
  if (std::abs(v - kPi) < eps) return "pi";
  if (std::abs(v + kPi) < eps) return "-pi";
  if (std::abs(v - kPi / 2) < eps) return "pi/2";
  if (std::abs(v + kPi / 2) < eps) return "-pi/2";
  return format_double(v);
}

}  // namespace detail

// Parses the Quil subset. Throws ParseError (with a 1-based line number) on
// malformed syntax, unknown instructions, RX angles outside {±pi, ±pi/2},
// duplicate or undefined labels, out-of-range classical addresses, duplicate
// DECLAREs, branch-probability pragmas not followed by a conditional jump,
// and probabilities outside [0, 1].
inline Program parse_program(std::string_view text,
                             std::string source_name = "<string>") {
  using namespace detail;
  Program p;
  p.source_name = std::move(source_name);

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    std::string_view raw = (eol == std::string_view::npos)
                               ? text.substr(pos)
                               : text.substr(pos, eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    auto hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;

    auto tokens = split_tokens(raw);
    std::string head = tokens[0];

    // Gate applications carry their parameter list inside the first token,
    // e.g. "RX(pi/2) 0".
    std::string name = head;
    std::optional<std::string> paren_arg;
    auto open = head.find('(');
    if (open != std::string::npos) {
      if (head.back() != ')')
        throw ParseError(line_no, "malformed parameter list in '" + head + "'");
      name = head.substr(0, open);
      paren_arg = head.substr(open + 1, head.size() - open - 2);
    }

    auto expect_args = [&](std::size_t n) {
      if (tokens.size() != n + 1)
        throw ParseError(line_no, name + " expects " + std::to_string(n) +
                                      " operand(s)");
    };
    auto expect_no_params = [&]() {
      if (paren_arg)
        throw ParseError(line_no, name + " takes no parameters");
    };

    if (name == "RX" || name == "RZ") {
      if (!paren_arg)
        throw ParseError(line_no, name + " requires an angle parameter");
      expect_args(1);
      double angle = parse_angle(*paren_arg, line_no);
      if (name == "RX") {
        constexpr double eps = 1e-12;
        bool ok = std::abs(angle - kPi) < eps || std::abs(angle + kPi) < eps ||
                  std::abs(angle - kPi / 2) < eps ||
                  std::abs(angle + kPi / 2) < eps;
        if (!ok)
          throw ParseError(line_no, "RX angle must be one of +/-pi, +/-pi/2");
      } else {
        // Normalize RZ angles into [-pi, pi].
        angle = std::remainder(angle, 2 * kPi);
      }
      GateApp g;
      g.gate = (name == "RX") ? GateKind::RX : GateKind::RZ;
      g.params = {angle};
      g.qubits = {parse_nonneg_int(tokens[1], line_no, "qubit index")};
      p.instructions.emplace_back(std::move(g));
    } else if (name == "CZ" || name == "SWAP") {
      expect_no_params();
      expect_args(2);
      int a = parse_nonneg_int(tokens[1], line_no, "qubit index");
      int b = parse_nonneg_int(tokens[2], line_no, "qubit index");
      if (a == b)
        throw ParseError(line_no, name + " requires two distinct qubits");
      GateApp g;
      g.gate = (name == "CZ") ? GateKind::CZ : GateKind::SWAP;
      g.qubits = {a, b};
      p.instructions.emplace_back(std::move(g));
    } else if (name == "MEASURE") {
      expect_no_params();
      expect_args(2);
      Measure m;
      m.qubit = parse_nonneg_int(tokens[1], line_no, "qubit index");
      m.target = parse_memref(tokens[2], line_no);
      p.instructions.emplace_back(std::move(m));
    } else if (name == "LABEL") {
      expect_no_params();
      expect_args(1);
      p.instructions.emplace_back(LabelDef{parse_label_ref(tokens[1], line_no)});
    } else if (name == "JUMP") {
      expect_no_params();
      expect_args(1);
      p.instructions.emplace_back(Jump{parse_label_ref(tokens[1], line_no)});
    } else if (name == "JUMP-WHEN" || name == "JUMP-UNLESS") {
      expect_no_params();
      expect_args(2);
      CondJump cj;
      cj.kind = (name == "JUMP-WHEN") ? CondKind::When : CondKind::Unless;
      cj.target = parse_label_ref(tokens[1], line_no);
      cj.condition = parse_memref(tokens[2], line_no);
      p.instructions.emplace_back(std::move(cj));
    } else if (name == "HALT") {
      expect_no_params();
      expect_args(0);
      p.instructions.emplace_back(Halt{});
    } else if (name == "DECLARE") {
      expect_no_params();
      expect_args(2);
      if (!valid_name(tokens[1]))
        throw ParseError(line_no, "malformed region name '" + tokens[1] + "'");
      std::string_view ty = tokens[2];
      int size = 1;
      if (ty.rfind("BIT", 0) != 0)
        throw ParseError(line_no, "only BIT memory is supported");
      ty.remove_prefix(3);
      if (!ty.empty()) {
        if (ty.front() != '[' || ty.back() != ']')
          throw ParseError(line_no, "malformed DECLARE type");
        size = parse_nonneg_int(ty.substr(1, ty.size() - 2), line_no,
                                "region size");
        if (size == 0) throw ParseError(line_no, "region size must be >= 1");
      }
      p.instructions.emplace_back(Declare{tokens[1], size});
    } else if (name == "PRAGMA") {
      if (tokens.size() >= 2 && tokens[1] != "BRANCH_PROBABILITY")
        throw ParseError(line_no, "unsupported pragma '" + tokens[1] + "'");
      expect_no_params();
      expect_args(2);
      double prob = parse_double(tokens[2], line_no);
      if (!(prob >= 0.0 && prob <= 1.0))
        throw ParseError(line_no, "branch probability must be in [0, 1]");
      p.instructions.emplace_back(BranchProbPragma{prob});
    } else {
      throw ParseError(line_no, "unsupported instruction '" + name + "'");
    }
    p.instruction_lines.push_back(line_no);
  }

  // Cross-instruction validation.
  std::set<std::string> labels;
  for (std::size_t i = 0; i < p.instructions.size(); ++i) {
    if (auto* l = std::get_if<LabelDef>(&p.instructions[i])) {
      if (!labels.insert(l->name).second)
        throw ParseError(p.instruction_lines[i],
                         "duplicate label '@" + l->name + "'");
    }
    if (auto* d = std::get_if<Declare>(&p.instructions[i])) {
      if (p.declared_size(d->name) >= 0)
        throw ParseError(p.instruction_lines[i],
                         "duplicate DECLARE '" + d->name + "'");
      p.declared.emplace_back(d->name, d->size);
    }
  }

  auto check_memref = [&](const MemRef& m, int line) {
    int size = p.declared_size(m.region);
    if (size < 0)
      throw ParseError(line, "undeclared memory region '" + m.region + "'");
    if (m.index >= size)
      throw ParseError(line, "memory index " + std::to_string(m.index) +
                                 " out of range for '" + m.region + "[" +
                                 std::to_string(size) + "]'");
  };

  for (std::size_t i = 0; i < p.instructions.size(); ++i) {
    int line = p.instruction_lines[i];
    if (auto* m = std::get_if<Measure>(&p.instructions[i])) {
      check_memref(m->target, line);
    } else if (auto* j = std::get_if<Jump>(&p.instructions[i])) {
      if (!labels.count(j->target))
        throw ParseError(line, "undefined label '@" + j->target + "'");
    } else if (auto* cj = std::get_if<CondJump>(&p.instructions[i])) {
      if (!labels.count(cj->target))
        throw ParseError(line, "undefined label '@" + cj->target + "'");
      check_memref(cj->condition, line);
    } else if (auto* pr = std::get_if<BranchProbPragma>(&p.instructions[i])) {
      if (i + 1 >= p.instructions.size() ||
          !std::holds_alternative<CondJump>(p.instructions[i + 1]))
        throw ParseError(line,
                         "PRAGMA BRANCH_PROBABILITY must be immediately "
                         "followed by a conditional jump");
      std::get<CondJump>(p.instructions[i + 1]).probability = pr->probability;
    }
  }
  return p;
}

inline std::string emit_memref(const MemRef& m) {
  return m.region + "[" + std::to_string(m.index) + "]";
}

inline std::string emit_instruction(const Instruction& ins) {
  using namespace detail;
  struct Visitor {
    std::string operator()(const GateApp& g) const {
      std::string out = gate_name(g.gate);
      if (!g.params.empty()) out += "(" + format_angle(g.params[0]) + ")";
      for (int q : g.qubits) out += " " + std::to_string(q);
      return out;
    }
    std::string operator()(const Measure& m) const {
      return "MEASURE " + std::to_string(m.qubit) + " " + emit_memref(m.target);
    }
    std::string operator()(const LabelDef& l) const { return "LABEL @" + l.name; }
    std::string operator()(const Jump& j) const { return "JUMP @" + j.target; }
    std::string operator()(const CondJump& cj) const {
      std::string op = cj.kind == CondKind::When ? "JUMP-WHEN" : "JUMP-UNLESS";
      return op + " @" + cj.target + " " + emit_memref(cj.condition);
    }
    std::string operator()(const Halt&) const { return "HALT"; }
    std::string operator()(const Declare& d) const {
      return "DECLARE " + d.name + " BIT[" + std::to_string(d.size) + "]";
    }
    std::string operator()(const BranchProbPragma& pr) const {
      return "PRAGMA BRANCH_PROBABILITY " + format_double(pr.probability);
    }
  };
  return std::visit(Visitor{}, ins);
}

// Emits text that parses back to a structurally equal program.
inline std::string emit_program(const Program& p) {
  std::string out;
  for (const auto& ins : p.instructions) {
    out += emit_instruction(ins);
    out += '\n';
  }
  return out;
}

inline bool structurally_equal(const Program& a, const Program& b,
                               double tol = 1e-12) {
  if (a.instructions.size() != b.instructions.size()) return false;
  if (a.declared != b.declared) return false;
  auto close = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  for (std::size_t i = 0; i < a.instructions.size(); ++i) {
    const auto& x = a.instructions[i];
    const auto& y = b.instructions[i];
    if (x.index() != y.index()) return false;
    bool ok = std::visit(
        [&](const auto& xi) {
          using T = std::decay_t<decltype(xi)>;
          const auto& yi = std::get<T>(y);
          if constexpr (std::is_same_v<T, GateApp>) {
            if (xi.gate != yi.gate || xi.qubits != yi.qubits ||
                xi.params.size() != yi.params.size())
              return false;
            for (std::size_t k = 0; k < xi.params.size(); ++k)
              if (!close(xi.params[k], yi.params[k])) return false;
            return true;
          } else if constexpr (std::is_same_v<T, Measure>) {
            return xi.qubit == yi.qubit && xi.target == yi.target;
          } else if constexpr (std::is_same_v<T, LabelDef>) {
            return xi.name == yi.name;
          } else if constexpr (std::is_same_v<T, Jump>) {
            return xi.target == yi.target;
          } else if constexpr (std::is_same_v<T, CondJump>) {
            if (xi.kind != yi.kind || xi.target != yi.target ||
                xi.condition != yi.condition)
              return false;
            if (xi.probability.has_value() != yi.probability.has_value())
              return false;
            return !xi.probability || close(*xi.probability, *yi.probability);
          } else if constexpr (std::is_same_v<T, Halt>) {
            return true;
          } else if constexpr (std::is_same_v<T, Declare>) {
            return xi.name == yi.name && xi.size == yi.size;
          } else {
            return close(xi.probability, yi.probability);
          }
        },
        x);
    if (!ok) return false;
  }
  return true;
}

}  // namespace quilcc
