#pragma once

#include <cstddef>
#include <cstdint>

namespace orbitree {

// Exploration limits shared across the library.  Count-like fields scale
// with a single multiplier so callers can loosen or tighten everything at
// once; structural depths are left untouched by scaling.
struct Budgets {
  std::size_t member_budget = 1'000'000;  // words per orbit enumeration
  int max_level = 8;                      // connection degree scan depth
  int tree_depth = 7;                     // default orbit tree expansion
  int k_budget = 50;                      // powers tried per order query
  int level_budget = 6;                   // levels per growth trajectory
  std::size_t closure_elements = 4000;    // distinct actions per closure
  std::size_t closure_nodes = 5'000'000;  // total search nodes per closure
  int enum_max_len = 6;                   // cyclically orbital enumeration
  int growth_offset = 4;                  // growth threshold 3^(degree+offset)
  int repetition_budget = 64;             // rounds in the equivalence search
  int filler_order_cap = 512;             // order bound for filler words

  Budgets scaled(double s) const {
    Budgets b = *this;
    if (s <= 0) return b;
    auto mul = [s](std::size_t v) {
      double r = static_cast<double>(v) * s;
      return r < 1 ? std::size_t{1} : static_cast<std::size_t>(r);
    };
    b.member_budget = mul(b.member_budget);
    b.k_budget = static_cast<int>(mul(static_cast<std::size_t>(b.k_budget)));
    b.closure_elements = mul(b.closure_elements);
    b.closure_nodes = mul(b.closure_nodes);
    b.repetition_budget =
        static_cast<int>(mul(static_cast<std::size_t>(b.repetition_budget)));
    b.filler_order_cap =
        static_cast<int>(mul(static_cast<std::size_t>(b.filler_order_cap)));
    return b;
  }
};

}  // namespace orbitree
