#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nvi {

/// Two-layer ReLU network f(x) = (1/m) sum_k b_k relu(w_k.x + c_k), output
/// truncated to [0, h_cap]. The class is constrained by the l1 path norm
/// (1/m) sum_k |b_k| (||w_k||_1 + |c_k|) <= path_budget.
class TwoLayerNet {
  public:
    TwoLayerNet(int width, int input_dim, double h_cap, double path_budget);

    int width() const { return m_; }
    int input_dim() const { return d_; }
    double h_cap() const { return h_cap_; }
    double path_budget() const { return budget_; }

    // Pre-truncation output.
    double raw(std::span<const double> x) const;
    // Truncated output in [0, h_cap].
    double eval(std::span<const double> x) const;

    std::vector<double> outer;   // b_k, size m
    std::vector<double> inner;   // w_k row-major, size m*d
    std::vector<double> biases;  // c_k, size m

    void scale_outer(double factor);
    void set_h_cap(double h) { h_cap_ = h; }
    void set_path_budget(double b) { budget_ = b; }

  private:
    int m_ = 0;
    int d_ = 0;
    double h_cap_ = 1.0;
    double budget_ = 1.0;
};

double path_norm(const TwoLayerNet& net);

// Rescales the outer coefficients so the path norm meets the budget; identity
// when already feasible.
TwoLayerNet project_path_norm(TwoLayerNet net, double budget);

/// Sparsely-connected deep ReLU network
///  f(x) = (W^(L) relu(.) + b^(L)) o ... o (W^(1) x + b^(1)),
/// with at most `sparsity_budget` nonzero parameters (enforced through a fixed
/// boolean mask) and every entry bounded by `entry_bound` in absolute value.
/// Output truncated to [0, h_cap].
class DeepReluNet {
  public:
    DeepReluNet(int depth, int width, int input_dim, double h_cap, int sparsity_budget,
                double entry_bound, std::uint64_t mask_seed);

    int depth() const { return L_; }
    int width() const { return m_; }
    int input_dim() const { return d_; }
    double h_cap() const { return h_cap_; }
    int sparsity_budget() const { return S_; }
    double entry_bound() const { return B_; }

    double raw(std::span<const double> x) const;
    double eval(std::span<const double> x) const;

    int count_nonzeros() const;
    double max_entry_abs() const;

    // Layer l has weight shape rows(l) x cols(l); weights/biases stored dense,
    // mask entries listed per layer for sparse compute.
    int rows(int l) const { return l == L_ - 1 ? 1 : m_; }
    int cols(int l) const { return l == 0 ? d_ : m_; }

    struct MaskEntry {
        int row;
        int col;
    };

    std::vector<std::vector<double>> weights;      // per layer, row-major rows(l)*cols(l)
    std::vector<std::vector<double>> bias;         // per layer, rows(l)
    std::vector<std::vector<MaskEntry>> w_active;  // fixed sparsity pattern
    std::vector<std::vector<int>> b_active;

    void set_h_cap(double h) { h_cap_ = h; }

  private:
    void build_chain_mask(std::uint64_t seed);

    int L_ = 2;
    int m_ = 1;
    int d_ = 1;
    double h_cap_ = 1.0;
    int S_ = 1;
    double B_ = 1.0;
};

// Zeroes off-mask entries and clamps surviving ones to [-entry_bound, entry_bound].
DeepReluNet project_deep_constraints(DeepReluNet net);

// Truncation helper shared by both families.
inline double truncate_value(double raw, double h_cap) {
    if (raw < 0.0) return 0.0;
    if (raw > h_cap) return h_cap;
    return raw;
}

}  // namespace nvi
