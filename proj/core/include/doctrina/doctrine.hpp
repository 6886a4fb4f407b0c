#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "doctrina/category.hpp"
#include "doctrina/order.hpp"

namespace doctrina {

struct PowerObjectCert {
  Obj power_obj = -1;
  Elem membership = 0;  // element of P(A × power_obj)
};

// Structure certificates a generator (or file) attaches to a doctrine.
// Checkers verify certificates and fall back to bounded search without them.
struct Certificates {
  std::map<Obj, Elem> delta;             // δ_A ∈ P(A×A)
  std::map<Obj, PowerObjectCert> power;  // weak power object per A
  // {φ}: B -> πA for φ ∈ P(A×B); nullopt when not certifiable
  std::function<std::optional<Mor>(Obj A, Obj B, Elem phi)> classify;
  // ⌊φ⌋ into A for φ ∈ P(A)
  std::function<std::optional<Mor>(Obj A, Elem phi)> comprehend;
  std::optional<Obj> pi1;    // power object of the terminal
  std::optional<Elem> eps1;  // ε₁ ∈ P(π1)
};

// A primary doctrine: base category + fiber assignment + reindexing.
// fiber() may throw SizeExceeded (e.g. a powerset fiber too large to index);
// checks treat such objects as out of scope and record the skip.
class Doctrine {
 public:
  virtual ~Doctrine() = default;
  virtual const Category& base() const = 0;
  virtual LatticePtr fiber(Obj a) const = 0;
  virtual MonotoneMap reindex(Mor f) const = 0;

  const Certificates& certs() const { return certs_; }
  Certificates& certs() { return certs_; }

 protected:
  Certificates certs_;
};

using DoctrinePtr = std::shared_ptr<const Doctrine>;

// Explicit fibers and reindex tables (file inputs, hand-built fixtures).
class TableDoctrine : public Doctrine {
 public:
  TableDoctrine(std::shared_ptr<const Category> base,
                std::vector<LatticePtr> fibers,
                std::vector<std::vector<Elem>> reindex_tables)
      : base_(std::move(base)),
        fibers_(std::move(fibers)),
        tables_(std::move(reindex_tables)) {}

  const Category& base() const override { return *base_; }
  LatticePtr fiber(Obj a) const override { return fibers_[a]; }
  MonotoneMap reindex(Mor f) const override {
    return MonotoneMap(fibers_[base_->cod(f)], fibers_[base_->dom(f)],
                       tables_[f]);
  }

 private:
  std::shared_ptr<const Category> base_;
  std::vector<LatticePtr> fibers_;
  std::vector<std::vector<Elem>> tables_;
};

// Fibers are pointwise powers value^points(A) of a small value lattice;
// reindexing precomposes with the point map. Powerset doctrines use the
// 2-chain, localic doctrines an arbitrary Heyting-algebra table.
class SetFamilyDoctrine : public Doctrine {
 public:
  SetFamilyDoctrine(std::shared_ptr<const Category> base, LatticePtr values,
                    std::uint64_t max_fiber);

  const Category& base() const override { return *base_; }
  LatticePtr fiber(Obj a) const override;
  MonotoneMap reindex(Mor f) const override;
  const LatticePtr& values() const { return values_; }

 private:
  std::shared_ptr<const Category> base_;
  LatticePtr values_;
  std::uint64_t max_fiber_;
  mutable std::mutex mu_;
  mutable std::map<Obj, LatticePtr> cache_;
  mutable std::map<Mor, MonotoneMap> reindex_cache_;
};

// Open-set doctrine over a function-backed base whose objects carry a
// specialisation preorder: fibers are the (table-backed) lattices of up-sets.
class OpensDoctrine : public Doctrine {
 public:
  // opens[a] = sorted list of point masks forming the open-set lattice of a.
  OpensDoctrine(std::shared_ptr<const Category> base,
                std::vector<std::vector<std::uint64_t>> opens);

  const Category& base() const override { return *base_; }
  LatticePtr fiber(Obj a) const override { return fibers_[a]; }
  MonotoneMap reindex(Mor f) const override;
  std::uint64_t open_mask(Obj a, Elem e) const { return opens_[a][e]; }
  std::optional<Elem> open_index(Obj a, std::uint64_t mask) const;

 private:
  std::shared_ptr<const Category> base_;
  std::vector<std::vector<std::uint64_t>> opens_;
  std::vector<LatticePtr> fibers_;
  mutable std::mutex mu_;
  mutable std::map<Mor, MonotoneMap> reindex_cache_;
};

// --- operations ---------------------------------------------------------------

StructureReport validate_doctrine(const Doctrine& P, const Caps& caps = {});

struct ElementaryWitness {
  std::map<Obj, Elem> delta;
};

struct ElementaryOutcome {
  std::optional<ElementaryWitness> witness;
  StructureReport report;
};

// With a candidate: verifies both adjunction conditions of the elementary
// definition exhaustively. Without: searches each P(A×A) in ascending element
// order (find mode) and returns the first verified witness, or none with a
// per-candidate failing trace.
ElementaryOutcome check_elementary(
    const Doctrine& P, const std::optional<std::map<Obj, Elem>>& candidate,
    const Caps& caps = {});

StructureReport check_quantifiers(const Doctrine& P, AdjointSide side,
                                  const Caps& caps = {});
StructureReport check_implicational(const Doctrine& P, const Caps& caps = {});
StructureReport check_joins(const Doctrine& P, const Caps& caps = {});

// ∃_f(α) via the generalized-quantification formula; requires the elementary
// witness and existential structure along the involved projections.
Elem generalized_exists(const Doctrine& P, const ElementaryWitness& W, Mor f,
                        Elem alpha, const Caps& caps = {});

struct ComprehensionResult {
  std::optional<Mor> mor;
  bool full = false;
  StructureReport report;
};

ComprehensionResult find_comprehension(const Doctrine& P, Obj A, Elem phi,
                                       const Caps& caps = {});

StructureReport check_weak_power_object(const Doctrine& P, Obj A,
                                        const PowerObjectCert& W,
                                        const Caps& caps = {});

StructureReport check_extensional_entailment(const Doctrine& P,
                                             const Caps& caps = {});

// --- doctrine morphisms ---------------------------------------------------------

struct DoctrineMorphism {
  DoctrinePtr src, dst;
  std::vector<Obj> objmap;  // F on objects
  std::vector<Mor> mormap;  // F on morphisms
  std::function<Elem(Obj, Elem)> family;  // f_A : P(A) -> R(FA)

  static DoctrineMorphism identity(DoctrinePtr p);
};

enum class MorphismMode { PD, ED };

StructureReport check_doctrine_morphism(const DoctrineMorphism& M,
                                        MorphismMode mode,
                                        const Caps& caps = {});

// 2-arrow condition for ν : F ⇒ G between (F,f) and (G,g); ν_A : FA -> GA.
StructureReport check_two_arrow(const DoctrineMorphism& F,
                                const DoctrineMorphism& G,
                                const std::vector<Mor>& nu,
                                const Caps& caps = {});

// Shared helpers used by the cofree construction.
namespace detail {
// ⟨π_i, π_j⟩-style tuple morphisms on (X×A)×A built via mediators.
struct TripleMaps {
  Obj xa = -1, xaa = -1;
  Mor m12 = -1;  // (X×A)×A -> X×A
  Mor m23 = -1;  // (X×A)×A -> A×A
  Mor e = -1;    // id_X × Δ_A : X×A -> (X×A)×A
};
std::optional<TripleMaps> triple_maps(const Category& c, Obj X, Obj A);
}  // namespace detail

}  // namespace doctrina
