#include "random_program.h"

#include <random>
#include <sstream>
#include <vector>

namespace supa::test {

namespace {

class Generator {
public:
  Generator(std::uint64_t seed, bool loopy) : rng_(seed), loopy_(loopy) {}

  std::string run() {
    int nfuncs = pick(1, 3);
    for (int f = 0; f < nfuncs; ++f)
      arity_.push_back(f == 0 ? 0 : pick(1, 2));
    int nglobals = pick(0, 2);
    for (int g = 0; g < nglobals; ++g) {
      os_ << "global @g" << g;
      if (g > 0 && chance(0.5))
        os_ << " -> @g" << pick(0, g - 1);
      os_ << "\n";
    }
    globals_ = nglobals;
    budget_ = 30 - 2 * nfuncs - 1;
    for (int f = 0; f < nfuncs; ++f)
      function(f, nfuncs);
    return os_.str();
  }

private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::string label() { return "l" + std::to_string(++labels_); }
  std::string var() { return "v" + std::to_string(++vars_); }
  std::string fname(int f) { return f == 0 ? "main" : "f" + std::to_string(f); }

  const std::string &any(const std::vector<std::string> &vs) { return vs[pick(0, static_cast<int>(vs.size()) - 1)]; }

  /// Emits one statement using variables in `scope`, adding any definition.
  void statement(std::vector<std::string> &scope, int self, int nfuncs) {
    --budget_;
    std::string l = label();
    int kind = pick(0, 11);
    std::string d = var();
    switch (kind) {
    case 0:
      os_ << "  " << l << ": %" << d << " = alloca o" << labels_ << (chance(0.1) ? " [array]" : "") << "\n";
      break;
    case 1:
      os_ << "  " << l << ": %" << d << " = " << (chance(0.3) ? "heap0" : "heap") << " h" << labels_ << "\n";
      break;
    case 2:
      if (globals_ == 0)
        return statement(scope, self, nfuncs);
      os_ << "  " << l << ": %" << d << " = addr @g" << pick(0, globals_ - 1) << "\n";
      break;
    case 3:
      os_ << "  " << l << ": %" << d << " = copy %" << any(scope) << "\n";
      break;
    case 4:
      os_ << "  " << l << ": %" << d << " = field %" << any(scope) << ", " << pick(0, 1) << "\n";
      break;
    case 5:
    case 6:
      os_ << "  " << l << ": %" << d << " = load %" << any(scope) << "\n";
      break;
    case 7:
    case 8:
      os_ << "  " << l << ": store %" << any(scope) << ", %" << any(scope) << "\n";
      return;
    case 9:
    case 10: {
      std::vector<int> callees;
      for (int g = 1; g < nfuncs; ++g)
        if (loopy_ || g > self)
          callees.push_back(g);
      if (callees.empty())
        return statement(scope, self, nfuncs);
      int g = callees[pick(0, static_cast<int>(callees.size()) - 1)];
      std::string args;
      for (int i = 0; i < arity_[g]; ++i)
        args += std::string(i ? ", " : "") + "%" + any(scope);
      if (chance(0.4)) {
        std::string fp = var();
        os_ << "  " << l << ": %" << fp << " = addr @" << fname(g) << "\n";
        scope.push_back(fp);
        l = label();
        --budget_;
        os_ << "  " << l << ": %" << d << " = call %" << fp << "(" << args << ")\n";
      } else {
        os_ << "  " << l << ": %" << d << " = call @" << fname(g) << "(" << args << ")\n";
      }
      break;
    }
    default:
      os_ << "  " << l << ": %" << d << " = alloca o" << labels_ << "\n";
      break;
    }
    scope.push_back(d);
  }

  void straight(std::vector<std::string> &scope, int n, int self, int nfuncs) {
    for (int i = 0; i < n && budget_ > 0; ++i)
      statement(scope, self, nfuncs);
  }

  void function(int f, int nfuncs) {
    int share = std::max(2, budget_ / (static_cast<int>(arity_.size()) - f));
    std::vector<std::string> scope;
    os_ << "\nfunc @" << fname(f) << "(";
    for (int i = 0; i < arity_[f]; ++i) {
      std::string p = var();
      os_ << (i ? ", " : "") << "%" << p;
      scope.push_back(p);
    }
    os_ << ") {\nbb0:\n";
    std::string first = var();
    --budget_;
    os_ << "  " << label() << ": %" << first << " = alloca o" << labels_ << "\n";
    scope.push_back(first);
    straight(scope, pick(1, std::max(1, share / 3)), f, nfuncs);

    int shape = pick(0, loopy_ ? 2 : 1);
    if (shape == 1) {
      // Diamond with a phi at the merge.
      os_ << "  " << label() << ": br bb1 bb2\nbb1:\n";
      std::vector<std::string> left = scope, right = scope;
      straight(left, pick(0, 3), f, nfuncs);
      os_ << "  " << label() << ": jmp bb3\nbb2:\n";
      straight(right, pick(0, 3), f, nfuncs);
      os_ << "  " << label() << ": jmp bb3\nbb3:\n";
      std::string m = var();
      os_ << "  " << label() << ": %" << m << " = phi [%" << left.back() << ", bb1], [%" << right.back()
          << ", bb2]\n";
      scope.push_back(m);
      straight(scope, pick(0, 3), f, nfuncs);
    } else if (shape == 2) {
      // A loop whose header phi carries a value around the back edge.
      os_ << "  " << label() << ": jmp bb1\nbb1:\n";
      std::string ph = var(), carried = var();
      os_ << "  " << label() << ": %" << ph << " = phi [%" << scope.back() << ", bb0], [%" << carried
          << ", bb1]\n";
      std::vector<std::string> body = scope;
      body.push_back(ph);
      straight(body, pick(1, 4), f, nfuncs);
      os_ << "  " << label() << ": %" << carried << " = copy %" << any(body) << "\n";
      os_ << "  " << label() << ": br bb1 bb2\nbb2:\n";
      scope.push_back(ph);
      straight(scope, pick(0, 2), f, nfuncs);
    }
    if (f == 0)
      os_ << "  " << label() << ": ret\n}\n";
    else
      os_ << "  " << label() << ": ret %" << any(scope) << "\n}\n";
  }

  std::mt19937_64 rng_;
  bool loopy_;
  std::ostringstream os_;
  std::vector<int> arity_;
  int globals_ = 0;
  int budget_ = 0;
  int labels_ = 0;
  int vars_ = 0;
};

} // namespace

std::string randomProgram(std::uint64_t seed, bool loopy) { return Generator(seed, loopy).run(); }

} // namespace supa::test
