// Acceptance suite: runs every criterion at its stated budget and prints
// one pass/fail line per criterion. Exit code 0 only when all pass.

#include "few/verify.hpp"

#include <cstdio>
#include <cstring>

int main(int argc, char** argv) {
    std::uint64_t seed = 2024;
    for (int i = 1; i < argc; ++i)
        if (std::strncmp(argv[i], "--seed=", 7) == 0) seed = std::strtoull(argv[i] + 7, nullptr, 10);

    auto results = few::run_verification(few::VerifyScale::full, seed);
    int failures = 0;
    for (const auto& r : results) {
        std::printf("%-4s %-34s value=%-12.6g threshold=%-12.6g [%.1fs]%s%s\n",
                    r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value, r.threshold, r.seconds,
                    r.detail.empty() ? "" : "  ", r.detail.c_str());
        if (!r.pass) ++failures;
    }
    std::printf("%d/%zu checks passed\n", static_cast<int>(results.size()) - failures,
                results.size());
    return failures == 0 ? 0 : 1;
}
