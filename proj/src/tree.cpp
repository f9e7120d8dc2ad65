#include "bgf/bart/tree.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "bgf/errors.hpp"

namespace bgf::bart {

CutpointTable CutpointTable::from_data(const Matrix& x, const std::vector<bool>& binary,
                                       int num_cutpoints) {
    if (binary.size() != x.cols) throw WidthMismatch("CutpointTable: binary flags width mismatch");
    CutpointTable table;
    table.cuts.resize(x.cols);
    std::vector<double> col(x.rows);
    for (std::size_t j = 0; j < x.cols; ++j) {
        if (binary[j]) {
            table.cuts[j] = {0.5};
            continue;
        }
        for (std::size_t i = 0; i < x.rows; ++i) col[i] = x.at(i, j);
        std::sort(col.begin(), col.end());
        std::vector<double> cj;
        cj.reserve(num_cutpoints);
        for (int k = 1; k <= num_cutpoints; ++k) {
            // interior uniform quantiles, excluding the extremes
            const double q = static_cast<double>(k) / (num_cutpoints + 1);
            const double h = q * static_cast<double>(x.rows - 1);
            const std::size_t lo = static_cast<std::size_t>(h);
            const double frac = h - static_cast<double>(lo);
            const double v = lo + 1 < x.rows ? col[lo] * (1.0 - frac) + col[lo + 1] * frac : col[lo];
            if (cj.empty() || v > cj.back()) cj.push_back(v);
        }
        if (cj.empty()) cj.push_back(col.front());
        table.cuts[j] = std::move(cj);
    }
    return table;
}

Tree::Tree() {
    nodes_.push_back(TreeNode{});
    nodes_[0].active = true;
    active_count_ = 1;
}

int Tree::allocate() {
    if (!free_slots_.empty()) {
        const int i = free_slots_.back();
        free_slots_.pop_back();
        nodes_[i] = TreeNode{};
        nodes_[i].active = true;
        return i;
    }
    nodes_.push_back(TreeNode{});
    nodes_.back().active = true;
    return static_cast<int>(nodes_.size()) - 1;
}

std::vector<int> Tree::leaves() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
        if (nodes_[i].active && nodes_[i].is_leaf()) out.push_back(i);
    return out;
}

std::vector<int> Tree::interior() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
        if (nodes_[i].active && !nodes_[i].is_leaf()) out.push_back(i);
    return out;
}

std::vector<int> Tree::nog_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        const auto& n = nodes_[i];
        if (n.active && !n.is_leaf() && nodes_[n.left].is_leaf() && nodes_[n.right].is_leaf())
            out.push_back(i);
    }
    return out;
}

std::vector<std::pair<int, int>> Tree::interior_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        const auto& n = nodes_[i];
        if (!n.active || n.is_leaf()) continue;
        if (!nodes_[n.left].is_leaf()) out.emplace_back(i, n.left);
        if (!nodes_[n.right].is_leaf()) out.emplace_back(i, n.right);
    }
    return out;
}

int Tree::assign(std::span<const double> x) const {
    int i = 0;
    while (!nodes_[i].is_leaf())
        i = x[nodes_[i].var] <= nodes_[i].cut_value ? nodes_[i].left : nodes_[i].right;
    return i;
}

std::pair<int, int> Tree::grow(int node, int var, int cut, double cut_value) {
    const int l = allocate();
    const int r = allocate();
    TreeNode& n = nodes_[node];
    n.var = var;
    n.cut = cut;
    n.cut_value = cut_value;
    n.left = l;
    n.right = r;
    nodes_[l].parent = node;
    nodes_[r].parent = node;
    nodes_[l].depth = n.depth + 1;
    nodes_[r].depth = n.depth + 1;
    active_count_ += 2;
    return {l, r};
}

void Tree::prune(int node) {
    TreeNode& n = nodes_[node];
    nodes_[n.left].active = false;
    nodes_[n.right].active = false;
    free_slots_.push_back(n.left);
    free_slots_.push_back(n.right);
    n.left = n.right = -1;
    n.var = -1;
    n.cut = -1;
    n.cut_value = 0.0;
    active_count_ -= 2;
}

void Tree::set_rule(int node, int var, int cut, double cut_value) {
    nodes_[node].var = var;
    nodes_[node].cut = cut;
    nodes_[node].cut_value = cut_value;
}

bool Tree::subtree_equal(int a, const Tree& other, int b) const {
    const TreeNode& na = nodes_[a];
    const TreeNode& nb = other.nodes_[b];
    if (na.is_leaf() != nb.is_leaf()) return false;
    if (na.is_leaf()) return na.leaf == nb.leaf;
    if (na.var != nb.var || na.cut != nb.cut || na.cut_value != nb.cut_value) return false;
    return subtree_equal(na.left, other, nb.left) && subtree_equal(na.right, other, nb.right);
}

bool Tree::same_structure(const Tree& other) const {
    return subtree_equal(0, other, 0);
}

namespace {
// Exact double round trip through text: %a hex floats parsed by strtod
// (iostream hexfloat input is unreliable across standard libraries).
std::string hex_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hex_double(std::istream& in) {
    std::string s;
    in >> s;
    return std::strtod(s.c_str(), nullptr);
}
} // namespace

void Tree::write_node(std::ostream& out, int i) const {
    const TreeNode& n = nodes_[i];
    if (n.is_leaf()) {
        out << "L " << hex_double(n.leaf) << "\n";
    } else {
        out << "I " << n.var << ' ' << n.cut << ' ' << hex_double(n.cut_value) << "\n";
        write_node(out, n.left);
        write_node(out, n.right);
    }
}

void Tree::write(std::ostream& out) const { write_node(out, 0); }

int Tree::read_node(std::istream& in, int parent, int depth) {
    char tag = 0;
    in >> tag;
    const int idx = parent < 0 ? 0 : allocate();
    nodes_[idx].parent = parent;
    nodes_[idx].depth = depth;
    if (tag == 'L') {
        nodes_[idx].leaf = parse_hex_double(in);
    } else if (tag == 'I') {
        int var = 0, cut = 0;
        in >> var >> cut;
        const double cv = parse_hex_double(in);
        const int l = read_node(in, idx, depth + 1);
        const int r = read_node(in, idx, depth + 1);
        nodes_[idx].var = var;
        nodes_[idx].cut = cut;
        nodes_[idx].cut_value = cv;
        nodes_[idx].left = l;
        nodes_[idx].right = r;
        active_count_ += 2;
    } else {
        throw DataError("Tree::read: malformed node tag");
    }
    return idx;
}

Tree Tree::read(std::istream& in) {
    Tree t;
    t.read_node(in, -1, 0);
    return t;
}

namespace {
void grow_prior(Tree& tree, int node, double tau, double alpha, const CutpointTable& cuts,
                Rng& rng, int max_depth) {
    const int depth = tree.node(node).depth;
    if (depth >= max_depth) return;
    const double p_split = tau * std::pow(1.0 + depth, -alpha);
    if (!rng.bernoulli(p_split)) return;
    const int var = static_cast<int>(rng.uniform_int(cuts.num_features()));
    const int cut = static_cast<int>(rng.uniform_int(cuts.cuts[var].size()));
    const auto [l, r] = tree.grow(node, var, cut, cuts.cuts[var][cut]);
    grow_prior(tree, l, tau, alpha, cuts, rng, max_depth);
    grow_prior(tree, r, tau, alpha, cuts, rng, max_depth);
}
} // namespace

Tree sample_tree_from_prior(double tau, double alpha, const CutpointTable& cuts, Rng& rng,
                            int max_depth) {
    Tree t;
    grow_prior(t, t.root(), tau, alpha, cuts, rng, max_depth);
    return t;
}

} // namespace bgf::bart
