#pragma once

// Small reverse-mode autodiff over Eigen matrices.  One Tape per forward
// pass; nodes are created in topological order, so the backward sweep is a
// single reverse walk.  Only the operations the model and losses need are
// provided.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rcakit/errors.hpp"

namespace rcakit::ad {

class Tape;

struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Eigen::MatrixXd& value() const;
    double scalar() const { return value()(0, 0); }
};

class Tape {
  public:
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        std::function<void(Tape&, const Node&)> backward;  // null for leaves
    };

    Var push(Eigen::MatrixXd value, std::function<void(Tape&, const Node&)> backward = nullptr) {
        Node n;
        n.value = std::move(value);
        n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
        n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return Var{this, static_cast<int>(nodes_.size()) - 1};
    }

    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }

    Eigen::MatrixXd& grad(int id) { return nodes_[id].grad; }
    const Eigen::MatrixXd& grad(const Var& v) const { return nodes_[v.id].grad; }

    // Backpropagates from a 1x1 node.
    void backward(const Var& loss) {
        if (nodes_[loss.id].value.size() != 1)
            throw ShapeMismatch("backward() expects a scalar node");
        nodes_[loss.id].grad(0, 0) = 1.0;
        for (int i = loss.id; i >= 0; --i) {
            const Node& n = nodes_[i];
            if (n.backward && n.grad.cwiseAbs().sum() != 0.0) n.backward(*this, n);
        }
    }

  private:
    std::vector<Node> nodes_;
};

inline const Eigen::MatrixXd& Var::value() const { return tape->node(id).value; }

inline Var constant(Tape& t, Eigen::MatrixXd m) { return t.push(std::move(m)); }

// Leaves whose gradient the caller reads back after backward(); same
// mechanics as constant(), the distinction is only for readability.
inline Var leaf(Tape& t, const Eigen::MatrixXd& m) { return t.push(m); }

// --- arithmetic -------------------------------------------------------------

inline Var matmul(Var a, Var b) {
    Tape& t = *a.tape;
    const auto& A = a.value();
    const auto& B = b.value();
    if (A.cols() != B.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
    return t.push(A * B, [a, b](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += n.grad * tp.node(b.id).value.transpose();
        tp.grad(b.id) += tp.node(a.id).value.transpose() * n.grad;
    });
}

inline Var add(Var a, Var b) {
    Tape& t = *a.tape;
    if (a.value().rows() != b.value().rows() || a.value().cols() != b.value().cols())
        throw ShapeMismatch("add: shapes differ");
    return t.push(a.value() + b.value(), [a, b](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += n.grad;
        tp.grad(b.id) += n.grad;
    });
}

inline Var sub(Var a, Var b) {
    Tape& t = *a.tape;
    return t.push(a.value() - b.value(), [a, b](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += n.grad;
        tp.grad(b.id) -= n.grad;
    });
}

inline Var cmul(Var a, Var b) {  // elementwise
    Tape& t = *a.tape;
    return t.push(a.value().cwiseProduct(b.value()), [a, b](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += n.grad.cwiseProduct(tp.node(b.id).value);
        tp.grad(b.id) += n.grad.cwiseProduct(tp.node(a.id).value);
    });
}

inline Var mul_const(Var a, const Eigen::MatrixXd& c) {  // elementwise by constant
    Tape& t = *a.tape;
    Eigen::MatrixXd cc = c;
    return t.push(a.value().cwiseProduct(cc), [a, cc](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += n.grad.cwiseProduct(cc);
    });
}

inline Var scale(Var a, double s) {
    Tape& t = *a.tape;
    return t.push(a.value() * s,
                  [a, s](Tape& tp, const Tape::Node& n) { tp.grad(a.id) += n.grad * s; });
}

inline Var add_scalar(Var a, double s) {
    Tape& t = *a.tape;
    return t.push(a.value().array() + s,
                  [a](Tape& tp, const Tape::Node& n) { tp.grad(a.id) += n.grad; });
}

// M + s where s is a 1x1 Var, broadcast to every entry.
inline Var add_broadcast(Var m, Var s) {
    Tape& t = *m.tape;
    return t.push(m.value().array() + s.scalar(), [m, s](Tape& tp, const Tape::Node& n) {
        tp.grad(m.id) += n.grad;
        tp.grad(s.id)(0, 0) += n.grad.sum();
    });
}

inline Var add_rowvec(Var m, Var row) {  // broadcast a 1xC bias over rows
    Tape& t = *m.tape;
    if (row.value().rows() != 1 || row.value().cols() != m.value().cols())
        throw ShapeMismatch("add_rowvec: bias shape mismatch");
    Eigen::MatrixXd out = m.value();
    out.rowwise() += Eigen::RowVectorXd(row.value().row(0));
    return t.push(std::move(out), [m, row](Tape& tp, const Tape::Node& n) {
        tp.grad(m.id) += n.grad;
        tp.grad(row.id) += n.grad.colwise().sum();
    });
}

inline Var mul_rowvec(Var m, Var row) {  // broadcast a 1xC gain over rows
    Tape& t = *m.tape;
    if (row.value().rows() != 1 || row.value().cols() != m.value().cols())
        throw ShapeMismatch("mul_rowvec: gain shape mismatch");
    Eigen::MatrixXd out = m.value().array().rowwise() * row.value().row(0).array();
    return t.push(std::move(out), [m, row](Tape& tp, const Tape::Node& n) {
        tp.grad(m.id) +=
            (n.grad.array().rowwise() * tp.node(row.id).value.row(0).array()).matrix();
        tp.grad(row.id) +=
            n.grad.cwiseProduct(tp.node(m.id).value).colwise().sum();
    });
}

inline Var transpose(Var a) {
    Tape& t = *a.tape;
    return t.push(a.value().transpose(), [a](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += n.grad.transpose();
    });
}

// --- nonlinearities ---------------------------------------------------------

inline Var relu(Var a) {
    Tape& t = *a.tape;
    return t.push(a.value().cwiseMax(0.0), [a](Tape& tp, const Tape::Node& n) {
        const auto& x = tp.node(a.id).value;
        tp.grad(a.id) += n.grad.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
    });
}

inline Var leaky_relu(Var a, double slope) {
    Tape& t = *a.tape;
    Eigen::MatrixXd out =
        a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
    return t.push(std::move(out), [a, slope](Tape& tp, const Tape::Node& n) {
        const auto& x = tp.node(a.id).value;
        Eigen::MatrixXd d = x.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
        tp.grad(a.id) += n.grad.cwiseProduct(d);
    });
}

inline Var elu(Var a) {
    Tape& t = *a.tape;
    Eigen::MatrixXd out =
        a.value().unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
    return t.push(std::move(out), [a](Tape& tp, const Tape::Node& n) {
        const auto& x = tp.node(a.id).value;
        Eigen::MatrixXd d = x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
        tp.grad(a.id) += n.grad.cwiseProduct(d);
    });
}

inline Var sigmoid(Var a) {
    Tape& t = *a.tape;
    Eigen::MatrixXd out = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    Eigen::MatrixXd saved = out;
    return t.push(std::move(out), [a, saved](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) +=
            n.grad.cwiseProduct(saved.cwiseProduct((1.0 - saved.array()).matrix()));
    });
}

// --- structure --------------------------------------------------------------

inline Var concat_cols(const std::vector<Var>& vs) {
    Tape& t = *vs.front().tape;
    long rows = vs.front().value().rows();
    long cols = 0;
    for (const auto& v : vs) cols += v.value().cols();
    Eigen::MatrixXd out(rows, cols);
    long off = 0;
    for (const auto& v : vs) {
        out.middleCols(off, v.value().cols()) = v.value();
        off += v.value().cols();
    }
    std::vector<Var> parts = vs;
    return t.push(std::move(out), [parts](Tape& tp, const Tape::Node& n) {
        long off = 0;
        for (const auto& v : parts) {
            long c = tp.node(v.id).value.cols();
            tp.grad(v.id) += n.grad.middleCols(off, c);
            off += c;
        }
    });
}

inline Var slice_cols(Var a, long start, long count) {
    Tape& t = *a.tape;
    return t.push(a.value().middleCols(start, count),
                  [a, start, count](Tape& tp, const Tape::Node& n) {
                      tp.grad(a.id).middleCols(start, count) += n.grad;
                  });
}

inline Var slice_rows(Var a, long start, long count) {
    Tape& t = *a.tape;
    return t.push(a.value().middleRows(start, count),
                  [a, start, count](Tape& tp, const Tape::Node& n) {
                      tp.grad(a.id).middleRows(start, count) += n.grad;
                  });
}

inline Var vcat_rows(const std::vector<Var>& vs) {
    Tape& t = *vs.front().tape;
    long cols = vs.front().value().cols();
    long rows = 0;
    for (const auto& v : vs) rows += v.value().rows();
    Eigen::MatrixXd out(rows, cols);
    long off = 0;
    for (const auto& v : vs) {
        out.middleRows(off, v.value().rows()) = v.value();
        off += v.value().rows();
    }
    std::vector<Var> parts = vs;
    return t.push(std::move(out), [parts](Tape& tp, const Tape::Node& n) {
        long off = 0;
        for (const auto& v : parts) {
            long r = tp.node(v.id).value.rows();
            tp.grad(v.id) += n.grad.middleRows(off, r);
            off += r;
        }
    });
}

inline Var mean_rows(Var a) {  // (R,C) -> (1,C)
    Tape& t = *a.tape;
    double inv = 1.0 / static_cast<double>(a.value().rows());
    return t.push(a.value().colwise().mean(), [a, inv](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += (Eigen::VectorXd::Ones(tp.node(a.id).value.rows()) * n.grad) * inv;
    });
}

inline Var sum_all(Var a) {  // -> 1x1
    Tape& t = *a.tape;
    Eigen::MatrixXd s(1, 1);
    s(0, 0) = a.value().sum();
    return t.push(std::move(s), [a](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id).array() += n.grad(0, 0);
    });
}

// S_ij = f_i + g_j from column vectors f, g of length V.
inline Var outer_rowsum(Var f, Var g) {
    Tape& t = *f.tape;
    long V = f.value().rows();
    Eigen::MatrixXd out =
        f.value() * Eigen::RowVectorXd::Ones(V) + Eigen::VectorXd::Ones(V) * g.value().transpose();
    return t.push(std::move(out), [f, g](Tape& tp, const Tape::Node& n) {
        tp.grad(f.id) += n.grad.rowwise().sum();
        tp.grad(g.id) += n.grad.colwise().sum().transpose();
    });
}

// --- softmax family ---------------------------------------------------------

// Row-wise softmax restricted to entries where mask != 0; masked-out entries
// are exactly 0 in the output.  Every row must have at least one active entry.
inline Var masked_row_softmax(Var a, const Eigen::MatrixXd& mask) {
    Tape& t = *a.tape;
    const auto& X = a.value();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(X.rows(), X.cols());
    for (long i = 0; i < X.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (long j = 0; j < X.cols(); ++j)
            if (mask(i, j) != 0.0) mx = std::max(mx, X(i, j));
        if (!std::isfinite(mx)) throw ShapeMismatch("masked_row_softmax: empty row");
        double z = 0.0;
        for (long j = 0; j < X.cols(); ++j)
            if (mask(i, j) != 0.0) z += std::exp(X(i, j) - mx);
        for (long j = 0; j < X.cols(); ++j)
            if (mask(i, j) != 0.0) P(i, j) = std::exp(X(i, j) - mx) / z;
    }
    Eigen::MatrixXd saved = P;
    return t.push(std::move(P), [a, saved](Tape& tp, const Tape::Node& n) {
        // dX = P o (dP - rowsum(dP o P))
        Eigen::VectorXd rs = n.grad.cwiseProduct(saved).rowwise().sum();
        Eigen::MatrixXd d = saved.cwiseProduct(n.grad - rs * Eigen::RowVectorXd::Ones(n.grad.cols()));
        tp.grad(a.id) += d;
    });
}

inline Var row_softmax(Var a) {
    return masked_row_softmax(a, Eigen::MatrixXd::Ones(a.value().rows(), a.value().cols()));
}

inline Var logsumexp_all(Var a) {  // over all entries -> 1x1
    Tape& t = *a.tape;
    double mx = a.value().maxCoeff();
    double z = (a.value().array() - mx).exp().sum();
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = mx + std::log(z);
    Eigen::MatrixXd soft = ((a.value().array() - mx).exp() / z).matrix();
    return t.push(std::move(out), [a, soft](Tape& tp, const Tape::Node& n) {
        tp.grad(a.id) += n.grad(0, 0) * soft;
    });
}

// --- normalization ----------------------------------------------------------

// Per-row standardization (x - mean) / sqrt(var + eps); affine gain/bias are
// applied by the caller via cmul/add_rowvec.
inline Var layer_norm_rows(Var a, double eps = 1e-5) {
    Tape& t = *a.tape;
    const auto& X = a.value();
    long R = X.rows(), C = X.cols();
    Eigen::MatrixXd Y(R, C);
    Eigen::VectorXd inv_std(R);
    for (long i = 0; i < R; ++i) {
        double mu = X.row(i).mean();
        double var = (X.row(i).array() - mu).square().mean();
        double is = 1.0 / std::sqrt(var + eps);
        inv_std(i) = is;
        Y.row(i) = (X.row(i).array() - mu) * is;
    }
    Eigen::MatrixXd savedY = Y;
    return t.push(std::move(Y), [a, savedY, inv_std](Tape& tp, const Tape::Node& n) {
        long R = savedY.rows(), C = savedY.cols();
        Eigen::MatrixXd d(R, C);
        for (long i = 0; i < R; ++i) {
            double mdy = n.grad.row(i).mean();
            double mdyy = n.grad.row(i).cwiseProduct(savedY.row(i)).mean();
            d.row(i) =
                inv_std(i) * (n.grad.row(i).array() - mdy - savedY.row(i).array() * mdyy);
        }
        tp.grad(a.id) += d;
    });
}

// Inverted dropout; identity when `training` is false or rate is 0.
inline Var dropout(Var a, double rate, bool training, std::mt19937_64& rng) {
    if (!training || rate <= 0.0) return a;
    std::bernoulli_distribution keep(1.0 - rate);
    Eigen::MatrixXd mask(a.value().rows(), a.value().cols());
    double s = 1.0 / (1.0 - rate);
    for (long i = 0; i < mask.rows(); ++i)
        for (long j = 0; j < mask.cols(); ++j) mask(i, j) = keep(rng) ? s : 0.0;
    return mul_const(a, mask);
}

// Row-wise cosine similarity of two (R,C) matrices -> (R,1); rows with a zero
// vector on either side yield 0 (and zero gradient).
inline Var cosine_rows(Var a, Var b) {
    Tape& t = *a.tape;
    const auto& A = a.value();
    const auto& B = b.value();
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw ShapeMismatch("cosine_rows: shapes differ");
    long R = A.rows();
    Eigen::VectorXd na(R), nb(R), dot(R), c(R);
    for (long i = 0; i < R; ++i) {
        na(i) = A.row(i).norm();
        nb(i) = B.row(i).norm();
        dot(i) = A.row(i).dot(B.row(i));
        c(i) = (na(i) == 0.0 || nb(i) == 0.0) ? 0.0 : dot(i) / (na(i) * nb(i));
    }
    return t.push(c, [a, b, na, nb, c](Tape& tp, const Tape::Node& n) {
        const auto& A = tp.node(a.id).value;
        const auto& B = tp.node(b.id).value;
        for (long i = 0; i < A.rows(); ++i) {
            if (na(i) == 0.0 || nb(i) == 0.0) continue;
            double g = n.grad(i, 0);
            tp.grad(a.id).row(i) +=
                g * (B.row(i) / (na(i) * nb(i)) - c(i) * A.row(i) / (na(i) * na(i)));
            tp.grad(b.id).row(i) +=
                g * (A.row(i) / (na(i) * nb(i)) - c(i) * B.row(i) / (nb(i) * nb(i)));
        }
    });
}

}  // namespace rcakit::ad
