#pragma once

// AP transmit precoders.  Column k of W is the beamforming vector w_k for
// user k.  The lifted matrices W_k = w_k w_k^H used by the semidefinite
// relaxation are kept alongside when an optimizer produced them (they may
// have rank > 1 before extraction).

#include <Eigen/Dense>
#include <vector>

namespace ssirs {

struct PrecoderSet {
    Eigen::MatrixXcd W;                   // M x K
    std::vector<Eigen::MatrixXcd> lifted; // optional, K matrices of size M x M

    int users() const { return static_cast<int>(W.cols()); }

    double total_power() const { return W.squaredNorm(); }

    Eigen::VectorXcd w(int k) const { return W.col(k); }

    static PrecoderSet from_columns(const Eigen::MatrixXcd& W) {
        PrecoderSet p;
        p.W = W;
        return p;
    }
};

}  // namespace ssirs
