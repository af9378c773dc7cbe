#include "rcakit/crd.hpp"

#include <cmath>
#include <deque>

namespace rcakit {

void CRDConfig::validate() const {
    if (delta <= 0.0) throw ConfigError("TCD margin delta must be > 0");
    if (margin_m <= 0.0) throw ConfigError("SCO margin m must be > 0");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("loss weights must be >= 0");
    if (affected_hops < 1) throw ConfigError("affected_hops must be >= 1");
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return 0.0;  // orthogonal convention for zero vectors
    return u.dot(v) / (nu * nv);
}

double tcd_loss(const Eigen::MatrixXd& anom, const Eigen::MatrixXd& norm, int root, double delta,
                TcdSign sign) {
    if (anom.rows() != norm.rows() || anom.cols() != norm.cols())
        throw ShapeMismatch("tcd_loss: embedding shapes differ");
    long V = anom.rows();
    if (root < 0 || root >= V) throw UnknownRoot("tcd_loss: root index out of range");
    Eigen::VectorXd c(V);
    for (long i = 0; i < V; ++i) c(i) = cosine(anom.row(i), norm.row(i));
    double loss = 0.0;
    for (long i = 0; i < V; ++i) {
        if (i == root) continue;
        double slack = sign == TcdSign::Prose ? delta + c(root) - c(i) : delta - c(root) + c(i);
        loss += std::max(0.0, slack);
    }
    return loss;
}

std::set<int> affected_set(int root, const CallGraphSnapshot& snapshot, int hops) {
    if (root < 0 || root >= snapshot.n_services)
        throw UnknownRoot("affected_set: root index out of range");
    std::vector<std::vector<int>> adj(snapshot.n_services);
    for (const auto& [edge, st] : snapshot.edges) {
        adj[edge.first].push_back(edge.second);
        adj[edge.second].push_back(edge.first);
    }
    std::vector<int> dist(snapshot.n_services, -1);
    std::deque<int> q{root};
    dist[root] = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        if (dist[u] >= hops) continue;
        for (int w : adj[u])
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                q.push_back(w);
            }
    }
    std::set<int> out;
    for (int i = 0; i < snapshot.n_services; ++i)
        if (i != root && dist[i] > 0) out.insert(i);
    return out;
}

double sco_loss(const Eigen::VectorXd& scores, int root, const std::set<int>& affected, double m) {
    if (root < 0 || root >= scores.size()) throw UnknownRoot("sco_loss: root index out of range");
    if (affected.count(root)) throw RootInAffected("sco_loss: affected set contains the root");
    double loss = 0.0;
    for (int i : affected) loss += std::max(0.0, m - (scores(root) - scores(i)));
    return loss;
}

double ce_loss(const Eigen::VectorXd& logits, int root) {
    if (root < 0 || root >= logits.size()) throw UnknownRoot("ce_loss: root index out of range");
    double mx = logits.maxCoeff();
    double lse = mx + std::log((logits.array() - mx).exp().sum());
    return lse - logits(root);
}

double total_loss(double ce, double tcd, double sco, double lambda1, double lambda2) {
    double total = ce + lambda1 * tcd + lambda2 * sco;
    if (!std::isfinite(total)) throw NonFinite("total_loss: non-finite value");
    return total;
}

// --- autodiff versions ------------------------------------------------------

ad::Var tcd_loss_ad(ad::Var anom, ad::Var norm, int root, double delta, TcdSign sign) {
    long V = anom.value().rows();
    if (root < 0 || root >= V) throw UnknownRoot("tcd_loss_ad: root index out of range");
    ad::Var c = ad::cosine_rows(anom, norm);  // (V,1)
    Eigen::MatrixXd pick_root = Eigen::MatrixXd::Zero(1, V);
    pick_root(0, root) = 1.0;
    ad::Var cr = ad::matmul(ad::constant(*anom.tape, pick_root), c);  // 1x1
    ad::Var slack = sign == TcdSign::Prose
                        ? ad::add_broadcast(ad::add_scalar(ad::scale(c, -1.0), delta), cr)
                        : ad::add_broadcast(ad::add_scalar(c, delta), ad::scale(cr, -1.0));
    Eigen::MatrixXd keep = Eigen::MatrixXd::Ones(V, 1);
    keep(root, 0) = 0.0;
    return ad::sum_all(ad::mul_const(ad::relu(slack), keep));
}

ad::Var sco_loss_ad(ad::Var scores, int root, const std::set<int>& affected, double m) {
    long V = scores.value().rows();
    if (root < 0 || root >= V) throw UnknownRoot("sco_loss_ad: root index out of range");
    if (affected.count(root)) throw RootInAffected("sco_loss_ad: affected set contains the root");
    if (affected.empty()) return ad::constant(*scores.tape, Eigen::MatrixXd::Zero(1, 1));
    Eigen::MatrixXd pick_root = Eigen::MatrixXd::Zero(1, V);
    pick_root(0, root) = 1.0;
    ad::Var sr = ad::matmul(ad::constant(*scores.tape, pick_root), scores);
    // m - S_r + S_i, kept only for i in the affected set
    ad::Var slack = ad::add_broadcast(ad::add_scalar(scores, m), ad::scale(sr, -1.0));
    Eigen::MatrixXd keep = Eigen::MatrixXd::Zero(V, 1);
    for (int i : affected) keep(i, 0) = 1.0;
    return ad::sum_all(ad::mul_const(ad::relu(slack), keep));
}

ad::Var ce_loss_ad(ad::Var logits, int root) {
    long V = logits.value().rows();
    if (root < 0 || root >= V) throw UnknownRoot("ce_loss_ad: root index out of range");
    Eigen::MatrixXd pick_root = Eigen::MatrixXd::Zero(1, V);
    pick_root(0, root) = 1.0;
    ad::Var lr = ad::matmul(ad::constant(*logits.tape, pick_root), logits);
    return ad::add(ad::logsumexp_all(logits), ad::scale(lr, -1.0));
}

}  // namespace rcakit
