#include "madkit/scenario.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace madkit {
namespace {

struct Token {
  std::string text;
  int line;
};

std::vector<Token> tokenize(std::istream& in) {
  std::vector<Token> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) out.push_back({tok, lineno});
  }
  return out;
}

class TokenStream {
 public:
  TokenStream(std::vector<Token> toks, std::string name)
      : toks_(std::move(toks)), name_(std::move(name)) {}

  bool done() const { return pos_ >= toks_.size(); }
  const Token& peek() const {
    if (done()) fail("unexpected end of input", last_line());
    return toks_[pos_];
  }
  Token next() {
    Token t = peek();
    ++pos_;
    return t;
  }
  void expect(const std::string& text) {
    Token t = next();
    if (t.text != text) fail("expected '" + text + "', got '" + t.text + "'", t.line);
  }
  double number(const std::string& what) {
    Token t = next();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.text.size())
      fail("expected a number for " + what + ", got '" + t.text + "'", t.line);
    return v;
  }
  int integer(const std::string& what) {
    Token t = peek();
    double v = number(what);
    if (v != std::floor(v) || std::abs(v) > 1e9)
      fail("expected an integer for " + what + ", got '" + t.text + "'", t.line);
    return static_cast<int>(v);
  }
  /// True if the next token parses as a number (used for greedy value lists).
  bool peek_is_number() const {
    if (done()) return false;
    std::size_t used = 0;
    try {
      std::stod(toks_[pos_].text, &used);
    } catch (const std::exception&) {
      return false;
    }
    return used == toks_[pos_].text.size();
  }
  [[noreturn]] void fail(const std::string& msg, int line) const {
    throw std::runtime_error(name_ + ":" + std::to_string(line) + ": " + msg);
  }
  int last_line() const { return toks_.empty() ? 0 : toks_.back().line; }

 private:
  std::vector<Token> toks_;
  std::string name_;
  std::size_t pos_ = 0;
};

TrajectoryGeometry parse_geometry(TokenStream& ts) {
  ts.expect("{");
  std::map<std::string, double> scalars;
  std::vector<Eigen::RowVector3d> pi_rows;
  while (true) {
    Token key = ts.next();
    if (key.text == "}") break;
    if (key.text == "Pi") {
      Eigen::RowVector3d row;
      for (int i = 0; i < 3; ++i) row(i) = ts.number("Pi entry");
      pi_rows.push_back(row);
    } else if (key.text == "V" || key.text == "D" || key.text == "t0" ||
               key.text == "beta" || key.text == "K" || key.text == "R" ||
               key.text == "d") {
      if (scalars.count(key.text))
        ts.fail("duplicate geometry key '" + key.text + "'", key.line);
      scalars[key.text] = ts.number(key.text);
    } else {
      ts.fail("unknown geometry key '" + key.text + "'", key.line);
    }
  }
  for (const char* req : {"V", "D", "t0", "beta", "K", "R", "d"})
    if (!scalars.count(req))
      throw std::runtime_error(std::string("geometry block is missing key '") + req + "'");
  int d = static_cast<int>(scalars["d"]);
  if (scalars["d"] != d) throw std::runtime_error("geometry key 'd' must be an integer");
  int K = static_cast<int>(scalars["K"]);
  if (scalars["K"] != K) throw std::runtime_error("geometry key 'K' must be an integer");
  if (static_cast<int>(pi_rows.size()) != d)
    throw std::runtime_error("geometry block needs exactly d = " + std::to_string(d) +
                             " Pi rows, found " + std::to_string(pi_rows.size()));
  Eigen::MatrixXd Pi(d, 3);
  for (int i = 0; i < d; ++i) Pi.row(i) = pi_rows[i];
  TrajectoryGeometry geom(scalars["V"], scalars["D"], scalars["t0"], scalars["beta"],
                          std::move(Pi), K, scalars["R"]);
  geom.validate();
  return geom;
}

MultipoleSource parse_source(TokenStream& ts) {
  ts.expect("{");
  std::optional<int> l;
  std::map<int, double> a, b;
  std::vector<double> tensor;
  bool saw_harmonic = false, saw_tensor = false;
  while (true) {
    Token key = ts.next();
    if (key.text == "}") break;
    if (key.text == "l") {
      if (l) ts.fail("duplicate source key 'l'", key.line);
      l = ts.integer("l");
      if (*l < 1) ts.fail("source order l must be >= 1", key.line);
    } else if (key.text == "a" || key.text == "b") {
      if (!l) ts.fail("source key 'l' must come before coefficients", key.line);
      if (saw_tensor) ts.fail("source block mixes harmonic and tensor entries", key.line);
      saw_harmonic = true;
      int m = ts.integer("m");
      double v = ts.number("coefficient value");
      int lo = (key.text == "a") ? 0 : 1;
      if (m < lo || m > *l)
        ts.fail(key.text + " index m out of range [" + std::to_string(lo) + ", " +
                    std::to_string(*l) + "]",
                key.line);
      auto& dest = (key.text == "a") ? a : b;
      if (dest.count(m)) ts.fail("duplicate coefficient " + key.text + " " + std::to_string(m), key.line);
      dest[m] = v;
    } else if (key.text == "tensor") {
      if (!l) ts.fail("source key 'l' must come before tensor entries", key.line);
      if (saw_harmonic) ts.fail("source block mixes harmonic and tensor entries", key.line);
      saw_tensor = true;
      std::size_t want = 1;
      for (int i = 0; i < *l; ++i) want *= 3;
      while (ts.peek_is_number()) {
        if (tensor.size() == want)
          ts.fail("tensor has more than 3^l = " + std::to_string(want) + " entries",
                  ts.peek().line);
        tensor.push_back(ts.number("tensor entry"));
      }
    } else {
      ts.fail("unknown source key '" + key.text + "'", key.line);
    }
  }
  if (!l) throw std::runtime_error("source block is missing key 'l'");
  if (saw_tensor) {
    std::size_t want = 1;
    for (int i = 0; i < *l; ++i) want *= 3;
    if (tensor.size() != want)
      throw std::runtime_error("tensor needs 3^l = " + std::to_string(want) +
                               " entries, found " + std::to_string(tensor.size()));
    return MultipoleTensor(*l, std::move(tensor));
  }
  std::vector<double> av(*l + 1, 0.0), bv(*l, 0.0);
  for (auto [m, v] : a) av[m] = v;
  for (auto [m, v] : b) bv[m - 1] = v;
  return HarmonicCoefficients(*l, std::move(av), std::move(bv));
}

}  // namespace

Scenario parse_scenario(std::istream& in, const std::string& name) {
  TokenStream ts(tokenize(in), name);
  Scenario sc;
  bool have_geometry = false;
  while (!ts.done()) {
    Token block = ts.next();
    if (block.text == "geometry") {
      if (have_geometry) ts.fail("duplicate geometry block", block.line);
      sc.geometry = parse_geometry(ts);
      have_geometry = true;
    } else if (block.text == "source") {
      sc.sources.push_back(parse_source(ts));
    } else {
      ts.fail("unknown block '" + block.text + "' (expected geometry or source)", block.line);
    }
  }
  if (!have_geometry) throw std::runtime_error(name + ": no geometry block");
  if (sc.sources.empty()) throw std::runtime_error(name + ": no source blocks");
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  return parse_scenario(in, path);
}

}  // namespace madkit
