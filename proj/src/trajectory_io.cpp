#include "rmt/trajectory_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "rmt/errors.hpp"

namespace rmt {

namespace {

constexpr char magic[8] = {'R', 'M', 'T', 'D', 'B', 'M', '1', '\0'};
constexpr std::uint32_t version = 1;

static_assert(std::endian::native == std::endian::little, "trajectory files are little-endian");

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("truncated trajectory file");
    return v;
}

}  // namespace

void write_trajectory(const std::string& path, const DbmTrajectory& tr) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    const std::uint32_t N = tr.dim();
    const std::uint32_t M = tr.steps();
    const bool vec = !tr.vectors.empty();
    out.write(magic, 8);
    put<std::uint32_t>(out, version);
    put<std::uint32_t>(out, N);
    put<std::uint32_t>(out, M);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tr.method));
    put<std::uint32_t>(out, vec ? 1u : 0u);
    put<std::uint32_t>(out, 0u);
    put<std::uint64_t>(out, tr.noise_seed);
    put<double>(out, tr.time_offset);
    for (std::uint32_t m = 0; m <= M; ++m) {
        put<double>(out, tr.times[m]);
        for (std::uint32_t i = 0; i < N; ++i) put<double>(out, tr.lambdas[m](i));
        if (vec) {
            for (std::uint32_t i = 0; i < N; ++i)
                for (std::uint32_t j = 0; j < N; ++j) put<double>(out, tr.vectors[m](i, j));
        }
    }
    if (!out) throw Error("write failed for " + path);
}

DbmTrajectory read_trajectory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    char head[8];
    in.read(head, 8);
    if (!in || std::memcmp(head, magic, 8) != 0) throw Error("not a trajectory file: " + path);
    if (get<std::uint32_t>(in) != version) throw Error("unsupported trajectory version");
    const std::uint32_t N = get<std::uint32_t>(in);
    const std::uint32_t M = get<std::uint32_t>(in);
    const std::uint32_t method = get<std::uint32_t>(in);
    const bool vec = get<std::uint32_t>(in) != 0;
    get<std::uint32_t>(in);
    DbmTrajectory tr;
    tr.noise_seed = get<std::uint64_t>(in);
    tr.time_offset = get<double>(in);
    if (method > 1) throw Error("unknown method code in trajectory file");
    tr.method = static_cast<DbmMethod>(method);
    for (std::uint32_t m = 0; m <= M; ++m) {
        tr.times.push_back(get<double>(in));
        RealVector l(N);
        for (std::uint32_t i = 0; i < N; ++i) l(i) = get<double>(in);
        tr.lambdas.push_back(std::move(l));
        if (vec) {
            RealMatrix u(N, N);
            for (std::uint32_t i = 0; i < N; ++i)
                for (std::uint32_t j = 0; j < N; ++j) u(i, j) = get<double>(in);
            tr.vectors.push_back(std::move(u));
        }
    }
    return tr;
}

}  // namespace rmt
