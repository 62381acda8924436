#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace kinlab {

/// Runs f(begin, end) over a partition of [0, n) on `threads` workers.
/// Workers write disjoint ranges, so results are identical to the serial
/// execution bit for bit; reductions stay with the caller.
template <class F>
void parallel_for(int n, int threads, F&& f) {
    if (threads <= 1 || n < 2) {
        f(0, n);
        return;
    }
    int nt = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    int chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        int b = t * chunk;
        int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&f, b, e] { f(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace kinlab
