#ifndef MWLAB_NETWORK_HPP
#define MWLAB_NETWORK_HPP

#include <string>
#include <vector>

#include "mwlab/common.hpp"

namespace mwlab {

/// A single-hop switched network: `ell` queues and a finite set of service
/// vectors, kept closed under zeroing-out coordinates and sorted in the
/// canonical (lexicographic) order.
class Network {
  public:
    /// Builds a network from a raw list of service vectors.  The zero
    /// closure is applied automatically; `closure_added()` reports whether it
    /// enlarged the set.
    Network(int ell, std::vector<Vec> service_vectors);

    int ell() const { return ell_; }
    const std::vector<Vec>& service_set() const { return set_; }
    bool closure_added() const { return closure_added_; }

    /// Largest Euclidean norm over the service set.
    double max_service_norm() const;

  private:
    int ell_;
    std::vector<Vec> set_;
    bool closure_added_ = false;
};

/// Smallest superset of `vectors` closed under zeroing any subset of
/// coordinates, deduplicated and sorted lexicographically.
std::vector<Vec> zero_closure(const std::vector<Vec>& vectors);

/// All service vectors whose score mu.q is within `tol` of the maximum,
/// in canonical order.
std::vector<Vec> mw_schedules(const Network& net, const Vec& q, double tol = 0.0);

/// Same as mw_schedules but returning indices into net.service_set().
std::vector<int> mw_schedule_indices(const Network& net, const Vec& q, double tol = 0.0);

/// Deterministic Max-Weight pick: the lexicographically smallest maximizer.
const Vec& mw_pick(const Network& net, const Vec& q);
int mw_pick_index(const Network& net, const Vec& q, double tol = 1e-9);

enum class CapacityClass { Interior, Boundary, Exterior };

struct CapacityVerdict {
    CapacityClass classification;
    /// Signed distance estimate to the boundary of conv(S): the inscribed
    /// cross-polytope radius when inside, minus the Euclidean distance to
    /// conv(S) when outside.
    double margin;
};

std::string to_string(CapacityClass c);

/// Classifies an arrival-rate vector against the capacity region conv(S).
CapacityVerdict capacity_membership(const Network& net, const Vec& lambda,
                                    double tol = 1e-9);

}  // namespace mwlab

#endif
