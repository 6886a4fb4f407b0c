#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "doctrina/caps.hpp"
#include "doctrina/report.hpp"

namespace doctrina {

using Obj = std::int32_t;
using Mor = std::int32_t;

struct Product {
  Obj prod = -1;
  Mor p1 = -1, p2 = -1;
};

struct MediatorError {
  bool none = false;      // no mediator in the category
  bool non_unique = false;
  Mor first = -1, second = -1;
};

// Finite category with chosen binary products. Morphisms are records with a
// composition table; function-backed categories additionally carry element
// tables (point maps), which make mediators and validation cheap.
class Category {
 public:
  struct MorData {
    Obj dom = 0, cod = 0;
    std::string name;
    std::vector<std::int32_t> pt;  // element map dom->cod; empty if abstract
  };

  Obj add_object(std::string name, std::int32_t points = -1);
  // Adds a morphism; when `pt` is provided and an identical (dom,cod,pt)
  // morphism exists, returns the existing id.
  Mor add_morphism(Obj dom, Obj cod, std::vector<std::int32_t> pt,
                   std::string name = "");
  void set_identity(Obj a, Mor m) { id_[a] = m; }
  void set_compose(Mor g, Mor f, Mor gf);
  void declare_product(Obj a, Obj b, Product p) { prods_[{a, b}] = p; }
  void set_terminal(Obj t) { terminal_ = t; }

  // Completes the composition table from point maps (function-backed only)
  // and adds missing composites; fails if the closure exceeds caps.morphisms.
  void close_composition(const Caps& caps);
  // Adds mediators for all existing cones into declared products
  // (function-backed only); iterates with close_composition to a fixpoint.
  void close_products(const Caps& caps);

  std::int32_t num_objects() const { return (std::int32_t)obj_names_.size(); }
  std::int32_t num_morphisms() const { return (std::int32_t)mors_.size(); }
  const std::string& object_name(Obj a) const { return obj_names_[a]; }
  std::int32_t points(Obj a) const { return obj_points_[a]; }
  bool function_backed() const;

  Obj dom(Mor m) const { return mors_[m].dom; }
  Obj cod(Mor m) const { return mors_[m].cod; }
  const std::vector<std::int32_t>& point_map(Mor m) const { return mors_[m].pt; }
  std::string morphism_name(Mor m) const;
  Mor identity(Obj a) const { return id_[a]; }
  Mor compose(Mor g, Mor f) const;  // g ∘ f; -1 when undefined
  const std::vector<Mor>& hom(Obj a, Obj b) const;

  std::optional<Product> product(Obj a, Obj b) const;
  // Product lookup that raises SizeExceeded naming the pair when missing —
  // the product-closure audit before any fiber work.
  Product require_product(Obj a, Obj b) const;
  std::optional<Obj> terminal() const { return terminal_; }

  // The unique m with p1∘m = f and p2∘m = g (dom f = dom g); scans the
  // relevant hom-set.
  std::variant<Mor, MediatorError> mediator(Mor f, Mor g) const;
  Mor require_mediator(Mor f, Mor g) const;  // throws std::runtime_error

  // Canonical structural morphisms (built via mediator on demand).
  Mor diagonal(Obj a) const;                  // ⟨id,id⟩ : a -> a×a
  Mor twist(Obj a, Obj b) const;              // ⟨p2,p1⟩ : a×b -> b×a
  Mor pair_map(Mor f, Mor g) const;           // f×g := ⟨f∘p1, g∘p2⟩

  // Finds a morphism by its point map; requires function-backed hom sets.
  std::optional<Mor> find_by_table(Obj dom, Obj cod,
                                   const std::vector<std::int32_t>& pt) const;

 private:
  void index_hom(Mor m);

  std::vector<std::string> obj_names_;
  std::vector<std::int32_t> obj_points_;
  std::vector<MorData> mors_;
  std::vector<Mor> id_;
  std::vector<std::int32_t> comp_;  // dense M*M once sealed; see seal_
  std::map<std::pair<Obj, Obj>, Product> prods_;
  std::optional<Obj> terminal_;
  std::vector<std::vector<std::vector<Mor>>> hom_;
  std::unordered_map<std::string, Mor> table_index_;
  bool sealed_ = false;

 public:
  // Builds the dense composition matrix; must be called after construction
  // and before compose/validate. Idempotent.
  void seal();
};

StructureReport validate_category(const Category& c, const Caps& caps = {});
StructureReport validate_products(const Category& c, const Caps& caps = {});

}  // namespace doctrina
