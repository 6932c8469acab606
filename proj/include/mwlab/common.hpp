#ifndef MWLAB_COMMON_HPP
#define MWLAB_COMMON_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mwlab {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// small dense vector helpers
// ---------------------------------------------------------------------------

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scale(const Vec& a, double c) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

// r += c * a
inline void axpy(Vec& r, double c, const Vec& a) {
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += c * a[i];
}

inline bool all_nonneg(const Vec& a, double tol = 0.0) {
    for (double x : a)
        if (x < -tol) return false;
    return true;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Lexicographic comparison used as the canonical order on service vectors.
inline bool lex_less(const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// ---------------------------------------------------------------------------
// dense linear solve (partial pivoting), for the small KKT systems of the
// min-norm-point routines.  Returns false when the matrix is numerically
// singular.
// ---------------------------------------------------------------------------

inline bool solve_dense(std::vector<std::vector<double>> a, Vec rhs, Vec& out) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-13) return false;
        std::swap(a[piv], a[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * out[c];
        out[i] = s / a[i][i];
    }
    return true;
}

// ---------------------------------------------------------------------------
// counter-based random streams.  Every draw is a pure function of
// (seed, key path, counter), so replays are bit-exact and independent of
// thread scheduling.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t k) {
    return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL + (k << 1)));
}

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key), ctr_(0) {}

    // derive a child stream; children with distinct key paths never collide
    CounterRng child(std::uint64_t k) const { return CounterRng(mix_key(key_, k)); }

    std::uint64_t next_u64() { return splitmix64(key_ + 0xd1342543de82ef95ULL * ++ctr_); }

    // uniform on [0,1)
    double next_u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on [a,b)
    double uniform(double a, double b) { return a + (b - a) * next_u01(); }

    double log_uniform(double a, double b) { return a * std::exp(next_u01() * std::log(b / a)); }

    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::uint64_t key_;
    std::uint64_t ctr_;
};

inline CounterRng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t k = splitmix64(seed);
    for (std::uint64_t p : path) k = mix_key(k, p);
    return CounterRng(k);
}

// ---------------------------------------------------------------------------
// deterministic parallel map: results are indexed by task, so the merge order
// never depends on scheduling.
// ---------------------------------------------------------------------------

int default_thread_count();
void set_default_thread_count(int n);

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    threads = static_cast<int>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mwlab

#endif
