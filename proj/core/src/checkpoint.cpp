// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "relcurate/error.hpp"
#include "relcurate/io.hpp"

namespace relcurate {

namespace {

constexpr char kMagic[8] = {'R', 'C', 'C', 'K', 'P', 'T', '\0', '\0'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

class Writer {
public:
    template <typename T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void matrix(const Mat& m) {
        put<std::int64_t>(m.rows());
        put<std::int64_t>(m.cols());
        out_.append(reinterpret_cast<const char*>(m.data()),
                    static_cast<std::size_t>(m.size()) * sizeof(double));
    }
    std::string take() { return std::move(out_); }
    void raw(const char* p, std::size_t n) { out_.append(p, n); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    Mat matrix() {
        const auto rows = get<std::int64_t>();
        const auto cols = get<std::int64_t>();
        if (rows < 0 || cols < 0 || rows > (1 << 20) || cols > (1 << 20)) {
            throw Error("checkpoint: implausible matrix shape");
        }
        Mat m(rows, cols);
        const auto n = static_cast<std::size_t>(rows * cols) * sizeof(double);
        need(n);
        std::memcpy(m.data(), bytes_.data() + pos_, n);
        pos_ += n;
        return m;
    }
    void expect_magic() {
        need(sizeof kMagic);
        if (std::memcmp(bytes_.data(), kMagic, sizeof kMagic) != 0) {
            throw Error("checkpoint: bad magic");
        }
        pos_ += sizeof kMagic;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw Error("checkpoint: truncated");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

Vec as_column(const Mat& m) {
    if (m.cols() != 1) throw Error("checkpoint: expected a column vector");
    return m.col(0);
}

}  // namespace

std::string serialize_checkpoint(const GeneratorState& state) {
    const auto& p = state.model;
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint64_t>(p.seed);
    w.put<std::uint64_t>(p.step);
    w.put<double>(p.learning_rate);
    w.put<std::int32_t>(p.context_window);
    w.matrix(p.token_embeddings);
    w.matrix(p.image_projection);
    w.matrix(p.null_image_feature);
    w.matrix(p.output_head);
    w.matrix(state.projection.weight);
    w.matrix(state.projection.bias);
    return w.take();
}

GeneratorState deserialize_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    r.expect_magic();
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw Error("checkpoint: unsupported version " + std::to_string(version));
    }
    GeneratorState s;
    auto& p = s.model;
    p.seed = r.get<std::uint64_t>();
    p.step = r.get<std::uint64_t>();
    p.learning_rate = r.get<double>();
    p.context_window = r.get<std::int32_t>();
    p.token_embeddings = r.matrix();
    p.image_projection = r.matrix();
    p.null_image_feature = as_column(r.matrix());
    p.output_head = r.matrix();
    s.projection.weight = r.matrix();
    s.projection.bias = as_column(r.matrix());
    if (!r.done()) throw Error("checkpoint: trailing bytes");

    const auto d = p.token_embeddings.rows();
    const auto v = p.token_embeddings.cols();
    if (p.image_projection.rows() != d || p.null_image_feature.size() != p.image_projection.cols() ||
        p.output_head.rows() != v || p.output_head.cols() != 2 * d ||
        s.projection.weight.rows() != d || s.projection.weight.cols() != d ||
        s.projection.bias.size() != d || p.context_window < 1) {
        throw Error("checkpoint: inconsistent parameter shapes");
    }
    return s;
}

void save_checkpoint(const GeneratorState& state, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_checkpoint(state));
}

GeneratorState load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_file(path));
}

}  // namespace relcurate
