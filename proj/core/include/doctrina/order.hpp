#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "doctrina/caps.hpp"
#include "doctrina/report.hpp"

namespace doctrina {

using Elem = std::uint64_t;

// Finite meet-semilattice with a distinguished top. Elements are dense
// indices 0..size-1. Two backends:
//   - Table: explicit leq/meet tables (file inputs, opens lattices, fixtures)
//   - Power: pointwise power base^n of a small table lattice; the element
//     index is the mixed-radix code of the value vector. Covers powerset
//     fibers (base = 2-chain) and H-valued fibers without materialising
//     exponentially large tables.
class MeetSemilattice {
 public:
  struct Table {
    std::uint32_t n = 0;
    std::vector<std::uint8_t> leq;   // n*n, row-major: leq[a*n+b] = a <= b
    std::vector<std::uint32_t> meet; // n*n
    std::uint32_t top = 0;
    std::vector<std::string> names;  // optional, size n when present
  };
  struct Power {
    std::shared_ptr<const MeetSemilattice> base;  // table-backed, small
    std::uint32_t exponent = 0;
    std::uint64_t size = 1;                        // base->size() ^ exponent
    std::vector<std::string> point_names;          // optional, size exponent
  };

  MeetSemilattice() : impl_(Table{1, {1}, {0}, 0, {}}) {}
  static MeetSemilattice from_table(Table t);
  // Derives the meet table from leq; fails (returns nullopt) when some pair
  // has no greatest lower bound.
  static std::optional<MeetSemilattice> from_leq(
      std::uint32_t n, std::vector<std::uint8_t> leq, std::uint32_t top,
      std::vector<std::string> names = {});
  static MeetSemilattice chain(std::uint32_t n,
                               std::vector<std::string> names = {});
  static MeetSemilattice power(std::shared_ptr<const MeetSemilattice> base,
                               std::uint32_t exponent,
                               std::vector<std::string> point_names = {});
  static MeetSemilattice powerset(std::uint32_t n_points,
                                  std::vector<std::string> point_names = {});

  std::uint64_t size() const;
  bool leq(Elem a, Elem b) const;
  Elem meet(Elem a, Elem b) const;
  Elem top() const;

  // Derived structure; absence is reported as nullopt, never an error.
  std::optional<Elem> join(Elem a, Elem b) const;
  std::optional<Elem> bottom() const;
  std::optional<Elem> rpc(Elem a, Elem b) const;  // largest x with x∧a <= b

  bool is_power() const { return std::holds_alternative<Power>(impl_); }
  const Power& power_info() const { return std::get<Power>(impl_); }
  // Digit of a power element at a point (radix = base size).
  std::uint32_t digit(Elem e, std::uint32_t point) const;
  Elem with_digit(Elem e, std::uint32_t point, std::uint32_t value) const;

  std::string element_name(Elem e) const;
  bool structurally_equal(const MeetSemilattice& other) const;

 private:
  std::variant<Table, Power> impl_;
};

using LatticePtr = std::shared_ptr<const MeetSemilattice>;

// Monotone map between finite lattices. Either an explicit value table or a
// point-precomposition (reindexing a power fiber along a base point map).
class MonotoneMap {
 public:
  struct Precompose {
    // dom lattice = base^|point_map|, cod of the point function indexes the
    // input lattice: result digit at point p = input digit at point_map[p].
    std::vector<std::uint32_t> point_map;
  };

  MonotoneMap() = default;
  MonotoneMap(LatticePtr dom, LatticePtr cod, std::vector<Elem> table)
      : dom_(std::move(dom)), cod_(std::move(cod)), impl_(std::move(table)) {}
  MonotoneMap(LatticePtr dom, LatticePtr cod, Precompose pre)
      : dom_(std::move(dom)), cod_(std::move(cod)), impl_(std::move(pre)) {}

  static MonotoneMap identity(LatticePtr l);
  static MonotoneMap compose(const MonotoneMap& g, const MonotoneMap& f);

  const LatticePtr& dom() const { return dom_; }
  const LatticePtr& cod() const { return cod_; }
  Elem operator()(Elem e) const;

  // Exhaustive checks, capped by caps.lattice on |dom|.
  bool is_monotone(const Caps& caps) const;
  bool preserves_meets_and_top(const Caps& caps) const;
  bool same_table(const MonotoneMap& other, const Caps& caps) const;

 private:
  LatticePtr dom_, cod_;
  std::variant<std::vector<Elem>, Precompose> impl_;
};

// --- validation ------------------------------------------------------------

// Checks the FinMeetSemilattice invariants: partial order axioms, top is the
// unique maximum, meet(a,b) is the greatest lower bound of every pair.
StructureReport validate_semilattice(const MeetSemilattice& l,
                                     const Caps& caps = {});

// --- derived connectives ----------------------------------------------------

struct ConnectiveTable {
  std::uint64_t n = 0;
  std::optional<Elem> bottom;
  // Row-major n*n; nullopt = undefined.
  std::vector<std::optional<Elem>> join;
  std::vector<std::optional<Elem>> rpc;
  bool joins_total = false;
  bool rpc_total = false;
  bool distributive = false;  // meaningful when joins_total
  std::optional<std::array<Elem, 3>> distributivity_witness;
};

// Tabulates joins, relative pseudo-complements, bottom and distributivity.
// Requires |l| within caps.lattice.
ConnectiveTable derived_connectives(const MeetSemilattice& l,
                                    const Caps& caps = {});

// --- adjoints ---------------------------------------------------------------

enum class AdjointSide { Left, Right };

struct AdjointFailure {
  std::optional<std::pair<Elem, Elem>> counterexample;  // (p, q)
  bool join_required_missing = false;
  std::string detail;
};

// Candidate-then-verify adjoint computation for g between valid lattices:
//   side=Left : returns f with  f(p) <= q  iff  p <= g(q)   (f left of g)
//   side=Right: returns u with  g(q) <= p  iff  q <= u(p)   (u right of g)
// The candidate is built pointwise (meet/join of the comparison set) and then
// the adjunction is verified exhaustively; failures carry the failing pair.
std::variant<MonotoneMap, AdjointFailure> compute_adjoint(
    const MonotoneMap& g, AdjointSide side, const Caps& caps = {});

}  // namespace doctrina
