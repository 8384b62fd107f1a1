#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "b2opt/model/params.hpp"

// Checkpoint layout (little-endian throughout; see docs/checkpoint_format.md):
//   "B2OPTCKP" | u32 version | u32 t | u32 n | u32 d | u32 d_k | u32 h | u8 weight_sharing |
//   u8 ablation bits | u16 reserved | u32 tensor count |
//   tensor* { u16 name length | name | u32 rows | u32 cols | f64 values[rows*cols] } | "B2OPTEND"

namespace b2opt::model {

inline constexpr std::uint32_t checkpoint_version = 1;

namespace detail {

inline constexpr std::string_view ckpt_magic = "B2OPTCKP";
inline constexpr std::string_view ckpt_footer = "B2OPTEND";

class Writer {
public:
    void raw(std::string_view s) { buf_.append(s); }

    template <typename T>
    void put(T v)
    {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        U u = std::bit_cast<U>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i)
            buf_.push_back(char((u >> (8 * i)) & 0xff));
    }

    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    std::string_view raw(std::size_t n, const char* what)
    {
        need(n, what);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    template <typename T>
    T get(const char* what)
    {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        need(sizeof(T), what);
        U u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            u |= U(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return std::bit_cast<T>(u);
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n, const char* what) const
    {
        if (data_.size() - pos_ < n)
            throw CheckpointError(fmt::format("checkpoint truncated while reading {} at byte {}", what, pos_));
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize(const B2OptModel& model)
{
    const ModelConfig& c = model.config;
    detail::Writer w;
    w.raw(detail::ckpt_magic);
    w.put<std::uint32_t>(checkpoint_version);
    w.put<std::uint32_t>(std::uint32_t(c.blocks));
    w.put<std::uint32_t>(std::uint32_t(c.n));
    w.put<std::uint32_t>(std::uint32_t(c.d));
    w.put<std::uint32_t>(std::uint32_t(c.d_k));
    w.put<std::uint32_t>(std::uint32_t(c.hidden_width()));
    w.put<std::uint8_t>(c.weight_sharing ? 1 : 0);
    w.put<std::uint8_t>(c.ablation.bits());
    w.put<std::uint16_t>(0);
    const auto params = model.parameters();
    w.put<std::uint32_t>(std::uint32_t(params.size()));
    for (const ad::Parameter* p : params) {
        w.put<std::uint16_t>(std::uint16_t(p->name.size()));
        w.raw(p->name);
        w.put<std::uint32_t>(std::uint32_t(p->value.rows()));
        w.put<std::uint32_t>(std::uint32_t(p->value.cols()));
        for (double v : p->value.values())
            w.put<double>(v);
    }
    w.raw(detail::ckpt_footer);
    return w.take();
}

/// Parses a checkpoint; any inconsistency throws CheckpointError and nothing is returned.
inline B2OptModel deserialize(std::string_view bytes)
{
    detail::Reader r(bytes);
    if (r.raw(detail::ckpt_magic.size(), "magic") != detail::ckpt_magic)
        throw CheckpointError("not a checkpoint file (bad magic)");
    const auto version = r.get<std::uint32_t>("version");
    if (version != checkpoint_version)
        throw CheckpointError(fmt::format("checkpoint format version {} is not supported (expected {})", version,
                                          checkpoint_version));
    ModelConfig c;
    c.blocks = r.get<std::uint32_t>("t");
    c.n = r.get<std::uint32_t>("n");
    c.d = r.get<std::uint32_t>("d");
    c.d_k = r.get<std::uint32_t>("d_k");
    c.hidden = r.get<std::uint32_t>("h");
    c.weight_sharing = r.get<std::uint8_t>("weight_sharing") != 0;
    c.ablation = Ablation::from_bits(r.get<std::uint8_t>("ablation"));
    r.get<std::uint16_t>("reserved");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw CheckpointError(fmt::format("checkpoint header invalid: {}", e.what()));
    }

    B2OptModel model = identity_model(c);
    auto params = model.parameters();
    const auto count = r.get<std::uint32_t>("tensor count");
    if (count != params.size())
        throw CheckpointError(fmt::format("checkpoint holds {} tensors, header implies {}", count, params.size()));
    for (ad::Parameter* p : params) {
        const auto len = r.get<std::uint16_t>("tensor name length");
        const std::string_view name = r.raw(len, "tensor name");
        if (name != p->name)
            throw CheckpointError(fmt::format("checkpoint tensor '{}' found where '{}' was expected", name, p->name));
        const auto rows = r.get<std::uint32_t>("tensor rows");
        const auto cols = r.get<std::uint32_t>("tensor cols");
        if (rows != p->value.rows() || cols != p->value.cols())
            throw CheckpointError(fmt::format("checkpoint tensor '{}' is {}x{}, expected {}", p->name, rows, cols,
                                              p->value.shape()));
        for (double& v : p->value.values())
            v = r.get<double>("tensor values");
        p->grad = Matrix(rows, cols);
    }
    if (r.raw(detail::ckpt_footer.size(), "footer") != detail::ckpt_footer || !r.at_end())
        throw CheckpointError("checkpoint footer missing or trailing bytes present");
    return model;
}

inline void save_model(const B2OptModel& model, const std::filesystem::path& path)
{
    const std::string bytes = serialize(model);
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw CheckpointError(fmt::format("cannot open '{}' for writing", path.string()));
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out)
        throw CheckpointError(fmt::format("failed writing '{}'", path.string()));
}

inline B2OptModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CheckpointError(fmt::format("cannot open checkpoint '{}'", path.string()));
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

/// Run-config guard: the checkpoint's n and d must match the task.
inline void expect_dimensions(const ModelConfig& c, std::size_t n, std::size_t d)
{
    if (c.d != d)
        throw ConfigError(fmt::format("checkpoint was trained for d={} but the task has d={}", c.d, d));
    if (c.n != n)
        throw ConfigError(fmt::format("checkpoint was trained for n={} but the run uses n={}", c.n, n));
}

} // namespace b2opt::model
