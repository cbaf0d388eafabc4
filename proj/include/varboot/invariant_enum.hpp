#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "varboot/forms.hpp"
#include "varboot/varcalc.hpp"

namespace vb {

// Degree profile (d0, d1, d2, d3) of a candidate 4-form: di counts factors
// carrying i derivatives. Admissibility is the weighted degree bound.
struct DegreeProfile {
    int d0 = 0, d1 = 0, d2 = 0, d3 = 0;
    bool admissible() const {
        return d0 >= 0 && d1 >= 0 && d2 >= 0 && d3 >= 0 && d0 + 2 * d1 + 3 * d2 + 4 * d3 == 4;
    }
    friend bool operator==(const DegreeProfile& a, const DegreeProfile& b) {
        return a.d0 == b.d0 && a.d1 == b.d1 && a.d2 == b.d2 && a.d3 == b.d3;
    }
    friend bool operator<(const DegreeProfile& a, const DegreeProfile& b) {
        return std::tie(a.d0, a.d1, a.d2, a.d3) < std::tie(b.d0, b.d1, b.d2, b.d3);
    }
};

// all solutions of d0 + 2 d1 + 3 d2 + 4 d3 = 4
std::vector<DegreeProfile> admissible_profiles();
// the (d0, d1) profiles reachable by d_H and wedge alone
std::vector<std::pair<int, int>> dh_filtered_profiles();

enum class FactorKind { T, Q };

constexpr int kWedgeSlot = -1;

// One tensor factor of a contraction pattern: its kind and the contents of
// its two lower slots. A slot either binds a wedge differential or receives
// the upper index of the named factor (possibly its own: a trace).
struct PatternFactor {
    FactorKind kind = FactorKind::T;
    int slot[2] = {kWedgeSlot, kWedgeSlot};
};

// A symbolic recipe for one candidate invariant form: every factor's upper
// index is contracted into exactly one lower slot somewhere, and the free
// lower slots bind the wedge differentials in (factor, slot) order.
struct ContractionPattern {
    std::vector<PatternFactor> factors;

    int rank() const; // number of wedge-bound slots
    bool connected() const;
    std::vector<int> shape() const; // per-factor wedge-slot counts, descending

    // Minimal encoding over factor reorderings and per-factor slot swaps
    // (T slots swap with a sign, wedge labels re-sort with a sign). The
    // returned sign is 0 when the pattern is equivalent to its own negative.
    std::pair<std::vector<int>, int> canonical() const;

    static ContractionPattern wedge(const ContractionPattern& a, const ContractionPattern& b);
};

// The distortion split as two independent tensor(1,2) fields over a
// 4-dimensional world: T with antisymmetric and Q with symmetric lower pair.
struct DistortionVars {
    World* w = nullptr;
    FieldId T = 0, Q = 0;
    static DistortionVars make(World* w);
};

HorizontalForm instantiate(const DistortionVars& dv, const ContractionPattern& p);

// deduped nonzero canonical classes of rank-k patterns with k factors
std::vector<ContractionPattern> enumerate_patterns(int k, bool useT, bool useQ);

struct IndependenceCertificate {
    uint64_t seed = 0;
    size_t samples = 0;
    int rank = 0;
};

// Exact rank of the evaluation matrix of the forms over a large prime field,
// cross-checked between two independent sample batches. Throws RankUnstable
// when the batches keep disagreeing.
int independence_rank(const std::vector<HorizontalForm>& forms, uint64_t seed = 1,
                      IndependenceCertificate* cert = nullptr);

// Same, but for contraction patterns read as multilinear forms: the vector
// arguments stay ordered, no wedge antisymmetrization is applied. This is the
// independence notion under which the catalogue is counted.
int independence_rank(const std::vector<ContractionPattern>& patterns, uint64_t seed = 1,
                      IndependenceCertificate* cert = nullptr);

// true when a = c * b for some nonzero rational c (exact check)
bool proportional_forms(const HorizontalForm& a, const HorizontalForm& b);

struct BasisMember {
    ContractionPattern pattern;
    HorizontalForm form;
    bool decomposable = false;
    std::string label;
};

struct InvariantBasis {
    int k = 0;
    std::vector<BasisMember> members;
    IndependenceCertificate cert;
};

InvariantBasis enumerate_algebraic(const DistortionVars& dv, int k, bool useT = true,
                                   bool useQ = true, uint64_t seed = 1);

struct FirstOrderTerm {
    std::string label;
    HorizontalForm form;
    int family = 0; // 0: quadratic in dL, 1: alpha/beta type, 2: d_H of a 3-form
    bool trivial = false;
    int el_class = -1; // shared index among nontrivial terms with equal field equations
};

struct FirstOrderCatalogue {
    std::vector<FirstOrderTerm> terms;
    int nontrivial_classes = 0;
};

FirstOrderCatalogue enumerate_first_order(const DistortionVars& dv, bool useT = true,
                                          bool useQ = true);

// (algebraic 4-form count, nontrivial first-order class count) with the other
// part of the distortion forced to zero
std::pair<int, int> q_only_sector(const DistortionVars& dv);
std::pair<int, int> t_only_sector(const DistortionVars& dv);

// Verifies that the instantiated form transforms with det(A)^-1 (density) or
// the covariant tensor law (lower rank) under random invertible rational A,
// with first derivatives following the affine jet rule. Exact comparison.
bool equivariance_check_form(const DistortionVars& dv, const HorizontalForm& f, int trials,
                             uint64_t seed = 7);
bool equivariance_check(const DistortionVars& dv, const ContractionPattern& p, int trials,
                        uint64_t seed = 7);

} // namespace vb
