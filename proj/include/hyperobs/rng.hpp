#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace hyperobs {

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
	return mix_seed(master ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/**
 * Seedable 64-bit generator (mt19937_64).
 *
 * The distributions are implemented here rather than through <random>
 * distribution objects, whose output is implementation-defined; this keeps
 * seeded runs reproducible across standard libraries.
 */
class Rng {
public:
	explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

	std::uint64_t next() { return engine_(); }

	/// Uniform in [0, 1) with 53 random bits.
	double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

	/// Uniform integer in [0, n), unbiased (rejection sampling).
	std::uint64_t index(std::uint64_t n)
	{
		const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
		std::uint64_t r;
		do {
			r = engine_();
		} while (r >= limit);
		return r % n;
	}

	/// Standard normal via Box-Muller.
	double normal()
	{
		if (has_spare_) {
			has_spare_ = false;
			return spare_;
		}
		double u1 = 0.0;
		while (u1 <= 0.0)
			u1 = uniform01();
		const double u2 = uniform01();
		const double r = std::sqrt(-2.0 * std::log(u1));
		spare_ = r * std::sin(2.0 * M_PI * u2);
		has_spare_ = true;
		return r * std::cos(2.0 * M_PI * u2);
	}

	/// First k entries of `pool` become a uniform sample without replacement
	/// (partial Fisher-Yates shuffle).
	template <typename T>
	void partial_shuffle(std::vector<T>& pool, std::size_t k)
	{
		for (std::size_t i = 0; i < k && i + 1 < pool.size(); ++i) {
			const std::size_t j = i + static_cast<std::size_t>(index(pool.size() - i));
			std::swap(pool[i], pool[j]);
		}
	}

private:
	std::mt19937_64 engine_;
	double spare_ = 0.0;
	bool has_spare_ = false;
};

} // namespace hyperobs
