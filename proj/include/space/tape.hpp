#pragma once

// Reverse-mode autodiff over Matrix values. A Tape records one forward pass
// as a flat list of nodes with backward closures and is rebuilt per pass;
// values are immutable once produced.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "space/matrix.hpp"

namespace space {

struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix grad;

    ParamTensor() = default;
    ParamTensor(std::string n, Matrix v)
        : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

namespace detail {

inline double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

inline double gelu_grad_scalar(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
    const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779;
    return cdf + x * pdf;
}

}  // namespace detail

class Tape {
public:
    using Var = std::size_t;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(const Matrix& value) { return push(value); }

    const Matrix& value(Var v) const { return nodes_[v].val; }
    const Matrix& grad(Var v) const { return nodes_[v].grad; }

    Var matmul(Var a, Var b) {
        Var out = push(space::matmul(value(a), value(b)));
        nodes_[out].back = [a, b, out](Tape& t) {
            add_into(t.nodes_[a].grad, space::matmul_nt(t.nodes_[out].grad, t.value(b)));
            add_into(t.nodes_[b].grad, space::matmul_tn(t.value(a), t.nodes_[out].grad));
        };
        return out;
    }

    // a * b^T
    Var matmul_nt(Var a, Var b) {
        Var out = push(space::matmul_nt(value(a), value(b)));
        nodes_[out].back = [a, b, out](Tape& t) {
            add_into(t.nodes_[a].grad, space::matmul(t.nodes_[out].grad, t.value(b)));
            add_into(t.nodes_[b].grad, space::matmul_tn(t.nodes_[out].grad, t.value(a)));
        };
        return out;
    }

    Var add(Var a, Var b) {
        const Matrix& va = value(a);
        const Matrix& vb = value(b);
        if (!va.same_shape(vb)) {
            throw ShapeError("add " + shape_str(va) + " + " + shape_str(vb));
        }
        Matrix out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += vb.data[i];
        Var o = push(std::move(out));
        nodes_[o].back = [a, b, o](Tape& t) {
            add_into(t.nodes_[a].grad, t.nodes_[o].grad);
            add_into(t.nodes_[b].grad, t.nodes_[o].grad);
        };
        return o;
    }

    // x (T x C) + bias (1 x C) broadcast over rows.
    Var add_row_bias(Var x, Var bias) {
        const Matrix& vx = value(x);
        const Matrix& vb = value(bias);
        if (vb.rows != 1 || vb.cols != vx.cols) {
            throw ShapeError("add_row_bias " + shape_str(vx) + " + " + shape_str(vb));
        }
        Matrix out = vx;
        for (std::size_t i = 0; i < out.rows; ++i) {
            for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += vb(0, j);
        }
        Var o = push(std::move(out));
        nodes_[o].back = [x, bias, o](Tape& t) {
            add_into(t.nodes_[x].grad, t.nodes_[o].grad);
            const Matrix& g = t.nodes_[o].grad;
            Matrix& bg = t.nodes_[bias].grad;
            for (std::size_t i = 0; i < g.rows; ++i) {
                for (std::size_t j = 0; j < g.cols; ++j) bg(0, j) += g(i, j);
            }
        };
        return o;
    }

    Var scale(Var x, double c) {
        Matrix out = value(x);
        for (double& v : out.data) v *= c;
        Var o = push(std::move(out));
        nodes_[o].back = [x, c, o](Tape& t) {
            const Matrix& g = t.nodes_[o].grad;
            Matrix& xg = t.nodes_[x].grad;
            for (std::size_t i = 0; i < g.size(); ++i) xg.data[i] += c * g.data[i];
        };
        return o;
    }

    // Elementwise add of a constant matrix (no gradient to the constant).
    Var add_const(Var x, const Matrix& c) {
        const Matrix& vx = value(x);
        if (!vx.same_shape(c)) {
            throw ShapeError("add_const " + shape_str(vx) + " + " + shape_str(c));
        }
        Matrix out = vx;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += c.data[i];
        Var o = push(std::move(out));
        nodes_[o].back = [x, o](Tape& t) { add_into(t.nodes_[x].grad, t.nodes_[o].grad); };
        return o;
    }

    Var gelu(Var x) {
        Matrix out = value(x);
        for (double& v : out.data) v = detail::gelu_scalar(v);
        Var o = push(std::move(out));
        nodes_[o].back = [x, o](Tape& t) {
            const Matrix& g = t.nodes_[o].grad;
            const Matrix& vx = t.value(x);
            Matrix& xg = t.nodes_[x].grad;
            for (std::size_t i = 0; i < g.size(); ++i) {
                xg.data[i] += g.data[i] * detail::gelu_grad_scalar(vx.data[i]);
            }
        };
        return o;
    }

    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
        const Matrix& vx = value(x);
        const Matrix& vg = value(gain);
        const Matrix& vb = value(bias);
        if (vg.rows != 1 || vg.cols != vx.cols || !vg.same_shape(vb)) {
            throw ShapeError("layer_norm params " + shape_str(vg));
        }
        const std::size_t n = vx.cols;
        Matrix out(vx.rows, n);
        Matrix xhat(vx.rows, n);
        Matrix inv_sigma(vx.rows, 1);
        for (std::size_t i = 0; i < vx.rows; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < n; ++j) mean += vx(i, j);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = vx(i, j) - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            const double is = 1.0 / std::sqrt(var + eps);
            inv_sigma(i, 0) = is;
            for (std::size_t j = 0; j < n; ++j) {
                xhat(i, j) = (vx(i, j) - mean) * is;
                out(i, j) = vg(0, j) * xhat(i, j) + vb(0, j);
            }
        }
        Var o = push(std::move(out));
        nodes_[o].back = [x, gain, bias, o, xhat = std::move(xhat),
                          inv_sigma = std::move(inv_sigma)](Tape& t) {
            const Matrix& g = t.nodes_[o].grad;
            const Matrix& vg = t.value(gain);
            Matrix& xg = t.nodes_[x].grad;
            Matrix& gg = t.nodes_[gain].grad;
            Matrix& bg = t.nodes_[bias].grad;
            const std::size_t n = g.cols;
            for (std::size_t i = 0; i < g.rows; ++i) {
                double mean_dxhat = 0.0;
                double mean_dxhat_xhat = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dxhat = g(i, j) * vg(0, j);
                    mean_dxhat += dxhat;
                    mean_dxhat_xhat += dxhat * xhat(i, j);
                    gg(0, j) += g(i, j) * xhat(i, j);
                    bg(0, j) += g(i, j);
                }
                mean_dxhat /= static_cast<double>(n);
                mean_dxhat_xhat /= static_cast<double>(n);
                const double is = inv_sigma(i, 0);
                for (std::size_t j = 0; j < n; ++j) {
                    const double dxhat = g(i, j) * vg(0, j);
                    xg(i, j) += is * (dxhat - mean_dxhat - xhat(i, j) * mean_dxhat_xhat);
                }
            }
        };
        return o;
    }

    Var softmax_rows(Var x) {
        Var o = push(space::softmax_rows(value(x)));
        nodes_[o].back = [x, o](Tape& t) {
            const Matrix& p = t.value(o);
            const Matrix& g = t.nodes_[o].grad;
            Matrix& xg = t.nodes_[x].grad;
            for (std::size_t i = 0; i < p.rows; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < p.cols; ++j) dot += g(i, j) * p(i, j);
                for (std::size_t j = 0; j < p.cols; ++j) {
                    xg(i, j) += p(i, j) * (g(i, j) - dot);
                }
            }
        };
        return o;
    }

    // Gather rows of a table (embedding lookup).
    Var embed_rows(Var table, std::span<const int> ids) {
        const Matrix& tab = value(table);
        Matrix out(ids.size(), tab.cols);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto id = static_cast<std::size_t>(ids[i]);
            if (id >= tab.rows) {
                throw IndexError("embed_rows id " + std::to_string(id) + " >= " + std::to_string(tab.rows));
            }
            for (std::size_t j = 0; j < tab.cols; ++j) out(i, j) = tab(id, j);
        }
        Var o = push(std::move(out));
        nodes_[o].back = [table, o, ids = std::vector<int>(ids.begin(), ids.end())](Tape& t) {
            const Matrix& g = t.nodes_[o].grad;
            Matrix& tg = t.nodes_[table].grad;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const auto id = static_cast<std::size_t>(ids[i]);
                for (std::size_t j = 0; j < g.cols; ++j) tg(id, j) += g(i, j);
            }
        };
        return o;
    }

    Var slice_cols(Var x, std::size_t start, std::size_t n) {
        const Matrix& vx = value(x);
        if (start + n > vx.cols) {
            throw IndexError("slice_cols [" + std::to_string(start) + ", " + std::to_string(start + n) + ")");
        }
        Matrix out(vx.rows, n);
        for (std::size_t i = 0; i < vx.rows; ++i) {
            for (std::size_t j = 0; j < n; ++j) out(i, j) = vx(i, start + j);
        }
        Var o = push(std::move(out));
        nodes_[o].back = [x, o, start, n](Tape& t) {
            const Matrix& g = t.nodes_[o].grad;
            Matrix& xg = t.nodes_[x].grad;
            for (std::size_t i = 0; i < g.rows; ++i) {
                for (std::size_t j = 0; j < n; ++j) xg(i, start + j) += g(i, j);
            }
        };
        return o;
    }

    Var concat_cols(std::span<const Var> parts) {
        std::size_t total = 0;
        const std::size_t rows = value(parts[0]).rows;
        for (Var p : parts) total += value(p).cols;
        Matrix out(rows, total);
        std::size_t off = 0;
        for (Var p : parts) {
            const Matrix& vp = value(p);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < vp.cols; ++j) out(i, off + j) = vp(i, j);
            }
            off += vp.cols;
        }
        Var o = push(std::move(out));
        nodes_[o].back = [o, parts = std::vector<Var>(parts.begin(), parts.end())](Tape& t) {
            const Matrix& g = t.nodes_[o].grad;
            std::size_t off = 0;
            for (Var p : parts) {
                Matrix& pg = t.nodes_[p].grad;
                for (std::size_t i = 0; i < g.rows; ++i) {
                    for (std::size_t j = 0; j < pg.cols; ++j) pg(i, j) += g(i, off + j);
                }
                off += pg.cols;
            }
        };
        return o;
    }

    // Sum of -log p[target] over positions with a set mask bit; 1x1 node.
    Var nll_sum(Var probs, std::span<const int> targets, std::span<const std::uint8_t> mask) {
        const Matrix& p = value(probs);
        if (targets.size() != p.rows || mask.size() != p.rows) {
            throw ShapeError("nll_sum rows " + std::to_string(p.rows));
        }
        double total = 0.0;
        for (std::size_t i = 0; i < p.rows; ++i) {
            if (!mask[i]) continue;
            total += cross_entropy(p.row(i), static_cast<std::size_t>(targets[i]));
        }
        Matrix out(1, 1);
        out(0, 0) = total;
        Var o = push(std::move(out));
        nodes_[o].back = [probs, o, targets = std::vector<int>(targets.begin(), targets.end()),
                          mask = std::vector<std::uint8_t>(mask.begin(), mask.end())](Tape& t) {
            const double g = t.nodes_[o].grad(0, 0);
            const Matrix& p = t.value(probs);
            Matrix& pg = t.nodes_[probs].grad;
            for (std::size_t i = 0; i < p.rows; ++i) {
                if (!mask[i]) continue;
                const auto tgt = static_cast<std::size_t>(targets[i]);
                double pv = p(i, tgt);
                if (pv < kProbEps) pv = kProbEps;
                pg(i, tgt) += -g / pv;
            }
        };
        return o;
    }

    void backward(Var loss, double seed = 1.0) {
        nodes_[loss].grad(0, 0) = seed;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            if (nodes_[i].back) nodes_[i].back(*this);
        }
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix val;
        Matrix grad;
        std::function<void(Tape&)> back;
    };

    static void add_into(Matrix& dst, const Matrix& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
    }

    Var push(Matrix v) {
        Node n;
        n.grad = Matrix(v.rows, v.cols);
        n.val = std::move(v);
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    std::vector<Node> nodes_;
};

}  // namespace space
