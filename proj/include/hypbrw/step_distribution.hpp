#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hypbrw/group.hpp"

namespace hypbrw {

/// Finitely supported symmetric step law mu on the group.
class StepDistribution {
 public:
  struct Atom {
    Word word;
    double prob;
  };

  /// Uniform on the generators.
  static StepDistribution simple(const GroupModel& g);
  /// mu(e) = p0, the rest uniform on the generators.
  static StepDistribution lazy(const GroupModel& g, double p0);
  /// Explicit table.  Entries for x and x^-1 are merged; the table must
  /// already be symmetric (mu(x) = mu(x^-1)) up to 1e-12 and sum to 1.
  static StepDistribution from_table(const GroupModel& g, std::vector<Atom> atoms);
  /// "srw", "lazy:p0" or "table:w1=p1;w2=p2;..." with tokenized words.
  static StepDistribution parse(const GroupModel& g, const std::string& spec);

  const GroupModel& group() const { return group_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double laziness() const { return laziness_; }
  /// Uniform on the generators plus optional mass at e.
  bool is_isotropic() const { return isotropic_; }
  int max_step() const { return max_step_; }
  std::string describe() const;

 private:
  StepDistribution(const GroupModel& g, std::vector<Atom> atoms);
  void validate() const;

  GroupModel group_;
  std::vector<Atom> atoms_;
  double laziness_ = 0.0;
  bool isotropic_ = false;
  int max_step_ = 0;
};

}  // namespace hypbrw
