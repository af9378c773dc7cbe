#pragma once

#include <set>

#include <Eigen/Dense>

#include "rcakit/autodiff.hpp"
#include "rcakit/core_types.hpp"

namespace rcakit {

// Sign convention for the temporal-disentanglement hinge.  `Prose` pushes the
// root's anomalous embedding AWAY from its normal baseline while keeping
// non-roots stable; `Literal` keeps the opposite sign of the printed formula
// for comparison runs.
enum class TcdSign { Prose, Literal };

struct CRDConfig {
    double delta = 0.5;      // TCD margin
    double margin_m = 0.2;   // SCO margin
    double lambda1 = 0.5;    // TCD weight
    double lambda2 = 0.2;    // SCO weight
    TcdSign tcd_sign = TcdSign::Prose;
    int affected_hops = 1;

    void validate() const;
};

// u.v / (|u||v|); zero vectors yield 0.
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// With c_i = cosine(anom_i, norm_i):
//   Prose:   sum_{i != r} max(0, delta + c_r - c_i)
//   Literal: sum_{i != r} max(0, delta - c_r + c_i)
double tcd_loss(const Eigen::MatrixXd& anom, const Eigen::MatrixXd& norm, int root, double delta,
                TcdSign sign = TcdSign::Prose);

// Services reachable from `root` within `hops` steps, edges taken in both
// directions, excluding the root itself.
std::set<int> affected_set(int root, const CallGraphSnapshot& snapshot, int hops);

// sum_{i in affected} max(0, m - (S_r - S_i))
double sco_loss(const Eigen::VectorXd& scores, int root, const std::set<int>& affected, double m);

// -log softmax(logits)[root]
double ce_loss(const Eigen::VectorXd& logits, int root);

double total_loss(double ce, double tcd, double sco, double lambda1, double lambda2);

// --- autodiff counterparts (same formulas, built on the caller's tape) ------

ad::Var tcd_loss_ad(ad::Var anom, ad::Var norm, int root, double delta,
                    TcdSign sign = TcdSign::Prose);
ad::Var sco_loss_ad(ad::Var scores, int root, const std::set<int>& affected, double m);
ad::Var ce_loss_ad(ad::Var logits, int root);

}  // namespace rcakit
