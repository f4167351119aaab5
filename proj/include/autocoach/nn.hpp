#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autocoach/rng.hpp"
#include "autocoach/scenario.hpp"

namespace autocoach::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Two tanh hidden layers (256/128 by default) feeding one or more linear
// heads. Used for both the actor (heads 5/5/3) and the critic (one scalar
// head). Batches are row-major: one sample per row.
struct Mlp {
    Matrix w1, w2;            // (h1 x in), (h2 x h1)
    Vector b1, b2;
    std::vector<Matrix> head_w;  // (out_k x h2)
    std::vector<Vector> head_b;

    static Mlp make(int input, int h1, int h2, const std::vector<int>& head_sizes, Rng& rng,
                    double head_scale = 0.01) {
        Mlp m;
        m.w1 = xavier(h1, input, rng);
        m.b1 = Vector::Zero(h1);
        m.w2 = xavier(h2, h1, rng);
        m.b2 = Vector::Zero(h2);
        for (int out : head_sizes) {
            m.head_w.push_back(xavier(out, h2, rng) * head_scale);
            m.head_b.push_back(Vector::Zero(out));
        }
        return m;
    }

    static Matrix xavier(int rows, int cols, Rng& rng) {
        const double s = std::sqrt(6.0 / (rows + cols));
        Matrix w(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-s, s);
        return w;
    }

    struct Activations {
        Matrix h1, h2;                 // post-tanh, (N x h)
        std::vector<Matrix> logits;    // (N x out_k)
    };

    Activations forward(const Matrix& x) const {
        Activations a;
        a.h1 = ((x * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
        a.h2 = ((a.h1 * w2.transpose()).rowwise() + b2.transpose()).array().tanh();
        a.logits.reserve(head_w.size());
        for (std::size_t k = 0; k < head_w.size(); ++k)
            a.logits.push_back((a.h2 * head_w[k].transpose()).rowwise() + head_b[k].transpose());
        return a;
    }

    struct Grads {
        Matrix w1, w2;
        Vector b1, b2;
        std::vector<Matrix> head_w;
        std::vector<Vector> head_b;

        static Grads zeros_like(const Mlp& m) {
            Grads g;
            g.w1 = Matrix::Zero(m.w1.rows(), m.w1.cols());
            g.w2 = Matrix::Zero(m.w2.rows(), m.w2.cols());
            g.b1 = Vector::Zero(m.b1.size());
            g.b2 = Vector::Zero(m.b2.size());
            for (const Matrix& w : m.head_w) g.head_w.push_back(Matrix::Zero(w.rows(), w.cols()));
            for (const Vector& b : m.head_b) g.head_b.push_back(Vector::Zero(b.size()));
            return g;
        }

        double squared_norm() const {
            double s = w1.squaredNorm() + w2.squaredNorm() + b1.squaredNorm() + b2.squaredNorm();
            for (const Matrix& w : head_w) s += w.squaredNorm();
            for (const Vector& b : head_b) s += b.squaredNorm();
            return s;
        }

        void scale(double f) {
            w1 *= f;
            w2 *= f;
            b1 *= f;
            b2 *= f;
            for (Matrix& w : head_w) w *= f;
            for (Vector& b : head_b) b *= f;
        }
    };

    // Backpropagates per-sample gradients on the head outputs.
    Grads backward(const Matrix& x, const Activations& a, const std::vector<Matrix>& d_logits) const {
        Grads g = Grads::zeros_like(*this);
        Matrix d_h2 = Matrix::Zero(a.h2.rows(), a.h2.cols());
        for (std::size_t k = 0; k < head_w.size(); ++k) {
            g.head_w[k] = d_logits[k].transpose() * a.h2;
            g.head_b[k] = d_logits[k].colwise().sum();
            d_h2 += d_logits[k] * head_w[k];
        }
        const Matrix d_z2 = d_h2.array() * (1.0 - a.h2.array().square());
        g.w2 = d_z2.transpose() * a.h1;
        g.b2 = d_z2.colwise().sum();
        const Matrix d_h1 = d_z2 * w2;
        const Matrix d_z1 = d_h1.array() * (1.0 - a.h1.array().square());
        g.w1 = d_z1.transpose() * x;
        g.b1 = d_z1.colwise().sum();
        return g;
    }

    bool finite() const {
        auto ok = [](const Matrix& m) { return m.allFinite(); };
        if (!ok(w1) || !ok(w2) || !b1.allFinite() || !b2.allFinite()) return false;
        for (const Matrix& w : head_w)
            if (!ok(w)) return false;
        for (const Vector& b : head_b)
            if (!b.allFinite()) return false;
        return true;
    }
};

// Clips the global gradient norm in place; returns the pre-clip norm.
inline double clip_grad_norm(Mlp::Grads& g, double max_norm) {
    const double norm = std::sqrt(g.squared_norm());
    if (norm > max_norm && norm > 0.0) g.scale(max_norm / norm);
    return norm;
}

// Adam with bias correction, one moment pair per tensor.
class Adam {
public:
    Adam() = default;
    Adam(const Mlp& model, double lr) : lr_(lr) {
        m_ = Mlp::Grads::zeros_like(model);
        v_ = Mlp::Grads::zeros_like(model);
    }

    void step(Mlp& model, const Mlp::Grads& g) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        auto upd = [&](auto& param, auto& m, auto& v, const auto& grad) {
            m = beta1_ * m + (1.0 - beta1_) * grad;
            v = (beta2_ * v.array() + (1.0 - beta2_) * grad.array().square()).matrix();
            param.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
        };
        upd(model.w1, m_.w1, v_.w1, g.w1);
        upd(model.b1, m_.b1, v_.b1, g.b1);
        upd(model.w2, m_.w2, v_.w2, g.w2);
        upd(model.b2, m_.b2, v_.b2, g.b2);
        for (std::size_t k = 0; k < model.head_w.size(); ++k) {
            upd(model.head_w[k], m_.head_w[k], v_.head_w[k], g.head_w[k]);
            upd(model.head_b[k], m_.head_b[k], v_.head_b[k], g.head_b[k]);
        }
    }

    double lr() const { return lr_; }
    std::int64_t steps() const { return t_; }

    const Mlp::Grads& moment1() const { return m_; }
    const Mlp::Grads& moment2() const { return v_; }
    void restore(Mlp::Grads m, Mlp::Grads v, std::int64_t t) {
        m_ = std::move(m);
        v_ = std::move(v);
        t_ = t;
    }

private:
    double lr_ = 1e-3;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::int64_t t_ = 0;
    Mlp::Grads m_, v_;
};

}  // namespace autocoach::nn
