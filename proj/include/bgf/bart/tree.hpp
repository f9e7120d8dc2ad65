#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "bgf/linalg.hpp"
#include "bgf/rng.hpp"

namespace bgf::bart {

/// Candidate split values per feature: 100 uniform quantile cutpoints for
/// continuous features, the single cutpoint 0.5 for binary features.
struct CutpointTable {
    std::vector<std::vector<double>> cuts;

    static CutpointTable from_data(const Matrix& x, const std::vector<bool>& binary,
                                   int num_cutpoints = 100);
    std::size_t num_features() const { return cuts.size(); }
};

struct TreeNode {
    int var = -1;       // split variable (interior nodes)
    int cut = -1;       // index into CutpointTable (interior), -1 for leaves
    double cut_value = 0.0; // materialized split value
    double leaf = 0.0;  // leaf value (terminal nodes)
    int left = -1;
    int right = -1;
    int parent = -1;
    int depth = 0;
    bool active = false;

    bool is_leaf() const { return left < 0; }
};

/// Binary regression tree with slot-based storage. Indices are stable across
/// grow/prune so per-observation leaf assignments can be patched in place.
class Tree {
public:
    Tree();

    const TreeNode& node(int i) const { return nodes_[i]; }
    int root() const { return 0; }
    std::size_t num_active() const { return active_count_; }

    std::vector<int> leaves() const;
    std::vector<int> interior() const;
    /// Interior nodes whose children are both leaves (prunable).
    std::vector<int> nog_nodes() const;
    /// Interior (parent, child) pairs where both are interior (swappable).
    std::vector<std::pair<int, int>> interior_pairs() const;

    int assign(std::span<const double> x) const;
    double evaluate(std::span<const double> x) const { return nodes_[assign(x)].leaf; }

    /// Splits leaf `node` on (var, cut). Returns {left, right} slot indices.
    std::pair<int, int> grow(int node, int var, int cut, double cut_value);
    /// Collapses the two leaf children of `node` back into a leaf.
    void prune(int node);
    void set_rule(int node, int var, int cut, double cut_value);
    void set_leaf(int node, double value) { nodes_[node].leaf = value; }

    /// Structural equality from the root (slot indices ignored).
    bool same_structure(const Tree& other) const;

    void write(std::ostream& out) const;            // preorder text form
    static Tree read(std::istream& in);

private:
    int allocate();
    bool subtree_equal(int a, const Tree& other, int b) const;
    void write_node(std::ostream& out, int i) const;
    int read_node(std::istream& in, int parent, int depth);

    std::vector<TreeNode> nodes_;
    std::vector<int> free_slots_;
    std::size_t active_count_ = 0;
};

/// Draws a tree from the structural prior: a node at depth d splits with
/// probability tau * (1+d)^(-alpha), rules uniform over variables/cutpoints.
Tree sample_tree_from_prior(double tau, double alpha, const CutpointTable& cuts, Rng& rng,
                            int max_depth = 64);

} // namespace bgf::bart
