#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "armspace/errors.hpp"
#include "armspace/model.hpp"

namespace armspace {

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

namespace detail {

constexpr char kModelMagic[8] = {'A', 'S', 'P', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kModelTrailer = 0xA59E17D1u;

enum class LayerTag : std::uint8_t { dense = 0, prelu = 1, batchnorm = 2, dropout = 3, sigmoid = 4 };

class Writer {
public:
    explicit Writer(const std::string& path) : os_(path, std::ios::binary) {
        if (!os_) throw IoError("cannot open for writing: " + path);
    }
    void bytes(const void* data, std::size_t n) {
        os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void doubles(const double* data, Eigen::Index n) {
        bytes(data, static_cast<std::size_t>(n) * sizeof(double));
    }
    void finish(const std::string& path) {
        os_.flush();
        if (!os_) throw IoError("write failed: " + path);
    }

private:
    std::ofstream os_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : is_(path, std::ios::binary), path_(path) {
        if (!is_) throw IoError("cannot open for reading: " + path);
    }
    void bytes(void* data, std::size_t n, const char* section) {
        is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n)
            throw CorruptContainer(std::string("truncated model container in section ") +
                                   section + ": " + path_);
    }
    std::uint8_t u8(const char* section) {
        std::uint8_t v;
        bytes(&v, 1, section);
        return v;
    }
    std::uint32_t u32(const char* section) {
        std::uint32_t v;
        bytes(&v, 4, section);
        return v;
    }
    double f64(const char* section) {
        double v;
        bytes(&v, 8, section);
        return v;
    }
    void doubles(double* data, Eigen::Index n, const char* section) {
        bytes(data, static_cast<std::size_t>(n) * sizeof(double), section);
    }

private:
    std::ifstream is_;
    std::string path_;
};

inline void write_network(Writer& w, const nn::Network& net) {
    w.u32(static_cast<std::uint32_t>(net.input_width));
    w.u32(static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
        if (const auto* d = std::get_if<nn::DenseLayer>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerTag::dense));
            w.u32(static_cast<std::uint32_t>(d->w.rows()));
            w.u32(static_cast<std::uint32_t>(d->w.cols()));
            w.doubles(d->w.data(), d->w.size());
            w.doubles(d->b.data(), d->b.size());
        } else if (const auto* p = std::get_if<nn::PReLULayer>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerTag::prelu));
            w.u32(static_cast<std::uint32_t>(p->a.size()));
            w.doubles(p->a.data(), p->a.size());
        } else if (const auto* bn = std::get_if<nn::BatchNormLayer>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerTag::batchnorm));
            w.u32(static_cast<std::uint32_t>(bn->gamma.size()));
            w.f64(bn->momentum);
            w.f64(bn->eps);
            w.doubles(bn->gamma.data(), bn->gamma.size());
            w.doubles(bn->beta.data(), bn->beta.size());
            w.doubles(bn->run_mean.data(), bn->run_mean.size());
            w.doubles(bn->run_var.data(), bn->run_var.size());
        } else if (const auto* drop = std::get_if<nn::DropoutLayer>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerTag::dropout));
            w.f64(drop->rate);
        } else {
            w.u8(static_cast<std::uint8_t>(LayerTag::sigmoid));
        }
    }
}

inline nn::Network read_network(Reader& r) {
    constexpr std::uint32_t kDimCap = 1u << 24;
    const std::uint32_t input_width = r.u32("network header");
    const std::uint32_t n_layers = r.u32("network header");
    if (input_width > kDimCap || n_layers > 4096)
        throw CorruptContainer("implausible network header");
    nn::Network net(static_cast<int>(input_width));
    Rng dummy(0);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const auto tag = static_cast<LayerTag>(r.u8("layer tag"));
        switch (tag) {
            case LayerTag::dense: {
                const std::uint32_t rows = r.u32("dense shape");
                const std::uint32_t cols = r.u32("dense shape");
                if (rows > kDimCap || cols > kDimCap)
                    throw CorruptContainer("implausible dense shape");
                nn::DenseLayer d(static_cast<int>(rows), static_cast<int>(cols), dummy);
                r.doubles(d.w.data(), d.w.size(), "dense weights");
                r.doubles(d.b.data(), d.b.size(), "dense bias");
                net.layers.emplace_back(std::move(d));
                net.current_width = static_cast<int>(cols);
                break;
            }
            case LayerTag::prelu: {
                const std::uint32_t n = r.u32("prelu shape");
                if (n > kDimCap) throw CorruptContainer("implausible prelu shape");
                nn::PReLULayer p(static_cast<int>(n));
                r.doubles(p.a.data(), p.a.size(), "prelu slopes");
                net.layers.emplace_back(std::move(p));
                break;
            }
            case LayerTag::batchnorm: {
                const std::uint32_t n = r.u32("batchnorm shape");
                if (n > kDimCap) throw CorruptContainer("implausible batchnorm shape");
                const double momentum = r.f64("batchnorm momentum");
                const double eps = r.f64("batchnorm eps");
                nn::BatchNormLayer bn(static_cast<int>(n), momentum, eps);
                r.doubles(bn.gamma.data(), bn.gamma.size(), "batchnorm gamma");
                r.doubles(bn.beta.data(), bn.beta.size(), "batchnorm beta");
                r.doubles(bn.run_mean.data(), bn.run_mean.size(), "batchnorm mean");
                r.doubles(bn.run_var.data(), bn.run_var.size(), "batchnorm var");
                net.layers.emplace_back(std::move(bn));
                break;
            }
            case LayerTag::dropout: {
                const double rate = r.f64("dropout rate");
                net.layers.emplace_back(nn::DropoutLayer(rate));
                break;
            }
            case LayerTag::sigmoid:
                net.layers.emplace_back(nn::SigmoidLayer());
                break;
            default:
                throw CorruptContainer("unknown layer tag");
        }
    }
    return net;
}

inline void write_scaler(Writer& w, const nn::Scaler& s) {
    w.u8(s.fitted ? 1 : 0);
    if (!s.fitted) return;
    w.u8(s.kind == nn::ScalerKind::standardize ? 0 : 1);
    w.f64(s.lo);
    w.f64(s.hi);
    w.u32(static_cast<std::uint32_t>(s.offset.size()));
    w.doubles(s.offset.data(), s.offset.size());
    w.doubles(s.spread.data(), s.spread.size());
    for (auto flag : s.degenerate) w.u8(flag);
}

inline nn::Scaler read_scaler(Reader& r) {
    nn::Scaler s;
    if (r.u8("scaler flag") == 0) return s;
    s.kind = r.u8("scaler kind") == 0 ? nn::ScalerKind::standardize : nn::ScalerKind::minmax;
    s.lo = r.f64("scaler lo");
    s.hi = r.f64("scaler hi");
    const std::uint32_t cols = r.u32("scaler cols");
    if (cols > (1u << 24)) throw CorruptContainer("implausible scaler width");
    s.offset.resize(cols);
    s.spread.resize(cols);
    s.degenerate.resize(cols);
    r.doubles(s.offset.data(), s.offset.size(), "scaler offset");
    r.doubles(s.spread.data(), s.spread.size(), "scaler spread");
    for (std::uint32_t i = 0; i < cols; ++i) s.degenerate[i] = r.u8("scaler flags");
    s.fitted = true;
    return s;
}

}  // namespace detail

/// Self-describing binary container: magic, version, layer manifest with
/// little-endian 64-bit parameter blobs, scaler states and the gating
/// threshold, closed by a trailer word.
inline void save_model(const CombinedModel& model, const std::string& path) {
    detail::Writer w(path);
    w.bytes(detail::kModelMagic, sizeof detail::kModelMagic);
    w.u32(detail::kModelVersion);
    w.u32(static_cast<std::uint32_t>(model.input_dim));
    w.f64(model.threshold);
    detail::write_network(w, model.encoder);
    detail::write_network(w, model.conf_head);
    detail::write_network(w, model.est_head);
    detail::write_scaler(w, model.input_scaler);
    detail::write_scaler(w, model.target_scaler);
    w.u32(detail::kModelTrailer);
    w.finish(path);
}

inline CombinedModel load_model(const std::string& path) {
    detail::Reader r(path);
    char magic[sizeof detail::kModelMagic];
    r.bytes(magic, sizeof magic, "magic");
    if (std::memcmp(magic, detail::kModelMagic, sizeof magic) != 0)
        throw CorruptContainer("bad magic string: " + path);
    const std::uint32_t version = r.u32("version");
    if (version != detail::kModelVersion)
        throw UnsupportedVersion("model container version " + std::to_string(version) +
                                 " is not supported");
    CombinedModel model;
    model.input_dim = static_cast<int>(r.u32("input dim"));
    model.threshold = r.f64("threshold");
    model.encoder = detail::read_network(r);
    model.conf_head = detail::read_network(r);
    model.est_head = detail::read_network(r);
    model.input_scaler = detail::read_scaler(r);
    model.target_scaler = detail::read_scaler(r);
    if (r.u32("trailer") != detail::kModelTrailer)
        throw CorruptContainer("bad trailer word: " + path);
    return model;
}

}  // namespace armspace
