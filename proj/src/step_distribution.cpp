#include "hypbrw/step_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"

namespace hypbrw {

namespace {

bool word_order(const StepDistribution::Atom& x, const StepDistribution::Atom& y) {
  if (x.word.size() != y.word.size()) return x.word.size() < y.word.size();
  return x.word < y.word;
}

}  // namespace

StepDistribution::StepDistribution(const GroupModel& g, std::vector<Atom> atoms)
    : group_(g), atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end(), word_order);
  for (const auto& a : atoms_) {
    if (a.word.empty()) laziness_ = a.prob;
    max_step_ = std::max(max_step_, static_cast<int>(a.word.size()));
  }
  isotropic_ = true;
  const double per_generator = (1.0 - laziness_) / g.alphabet_size();
  int generators = 0;
  for (const auto& a : atoms_) {
    if (a.word.empty()) continue;
    if (a.word.size() != 1 || std::abs(a.prob - per_generator) > 1e-15) isotropic_ = false;
    ++generators;
  }
  if (generators != g.alphabet_size()) isotropic_ = false;
  validate();
}

StepDistribution StepDistribution::simple(const GroupModel& g) { return lazy(g, 0.0); }

StepDistribution StepDistribution::lazy(const GroupModel& g, double p0) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw InvalidArgument(fmt::format("laziness must lie in [0, 1), got {}", p0));
  std::vector<Atom> atoms;
  if (p0 > 0.0) atoms.push_back({Word{}, p0});
  const double p = (1.0 - p0) / g.alphabet_size();
  for (int s = 0; s < g.alphabet_size(); ++s) atoms.push_back({Word{static_cast<Letter>(s)}, p});
  return StepDistribution(g, std::move(atoms));
}

StepDistribution StepDistribution::from_table(const GroupModel& g, std::vector<Atom> atoms) {
  std::map<Word, double> merged;
  for (auto& a : atoms) {
    if (!is_reduced(g, a.word)) throw InvalidArgument("step table contains a non-reduced word");
    if (!(a.prob >= 0.0)) throw InvalidArgument("step table contains a negative probability");
    if (a.prob > 0.0) merged[a.word] += a.prob;
  }
  for (const auto& [w, p] : merged) {
    auto it = merged.find(inverse(g, w));
    if (it == merged.end() || std::abs(it->second - p) > 1e-12)
      throw InvalidArgument(fmt::format("step table is not symmetric at '{}'", to_tokens(g, w)));
  }
  std::vector<Atom> out;
  for (auto& [w, p] : merged) out.push_back({w, p});
  return StepDistribution(g, std::move(out));
}

StepDistribution StepDistribution::parse(const GroupModel& g, const std::string& spec) {
  if (spec == "srw") return simple(g);
  if (spec.rfind("lazy:", 0) == 0) {
    std::size_t used = 0;
    double p0 = 0.0;
    try {
      p0 = std::stod(spec.substr(5), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != spec.size() - 5) throw InvalidArgument(fmt::format("bad laziness in '{}'", spec));
    return lazy(g, p0);
  }
  if (spec.rfind("table:", 0) == 0) {
    std::vector<Atom> atoms;
    std::string_view rest(spec);
    rest.remove_prefix(6);
    while (!rest.empty()) {
      auto semi = rest.find(';');
      auto entry = rest.substr(0, semi);
      rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
      if (entry.empty()) continue;
      auto eq = entry.find('=');
      if (eq == std::string_view::npos) throw InvalidArgument(fmt::format("step table entry '{}' lacks '='", entry));
      Word w = parse_tokens(g, entry.substr(0, eq));
      double p = 0.0;
      try {
        p = std::stod(std::string(entry.substr(eq + 1)));
      } catch (const std::exception&) {
        throw InvalidArgument(fmt::format("bad probability in step table entry '{}'", entry));
      }
      atoms.push_back({std::move(w), p});
    }
    return from_table(g, std::move(atoms));
  }
  throw InvalidArgument(fmt::format("unknown walk '{}' (expected srw, lazy:p0 or table:...)", spec));
}

void StepDistribution::validate() const {
  double total = 0.0;
  for (const auto& a : atoms_) total += a.prob;
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument(fmt::format("step probabilities sum to {}", total));

  // Admissibility: the support must generate the group.  Search a bounded ball
  // of the Cayley graph of the support for every generator.
  std::vector<Word> steps;
  for (const auto& a : atoms_)
    if (!a.word.empty()) steps.push_back(a.word);
  if (steps.empty()) throw InvalidArgument("step law is concentrated at e and is not admissible");
  const std::size_t radius = static_cast<std::size_t>(2 * max_step_ + 2);
  std::set<Word> seen{Word{}};
  std::vector<Word> frontier{Word{}};
  int found = 0;
  auto is_generator = [&](const Word& w) { return w.size() == 1; };
  while (!frontier.empty() && found < group_.alphabet_size()) {
    std::vector<Word> next;
    for (const auto& x : frontier) {
      for (const auto& s : steps) {
        Word y = mul(group_, x, s);
        if (y.size() > radius || !seen.insert(y).second) continue;
        if (is_generator(y)) ++found;
        next.push_back(std::move(y));
      }
    }
    frontier = std::move(next);
  }
  if (found < group_.alphabet_size())
    throw InvalidArgument("step law support does not generate the group (not admissible)");
}

std::string StepDistribution::describe() const {
  if (isotropic_) return laziness_ > 0.0 ? fmt::format("lazy:{}", laziness_) : "srw";
  std::string out = "table:";
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i > 0) out += ';';
    out += fmt::format("{}={}", to_tokens(group_, atoms_[i].word), atoms_[i].prob);
  }
  return out;
}

}  // namespace hypbrw
