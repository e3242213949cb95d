#include "core/artifact.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace bsqz {

static_assert(std::endian::native == std::endian::little, "artifact encoding assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'B', 'S', 'Q', 'Z'};

class Writer {
public:
    explicit Writer(ArtifactType type) {
        buf_.insert(buf_.end(), kMagic, kMagic + 4);
        u32(kArtifactVersion);
        u32(static_cast<std::uint32_t>(type));
    }

    void raw(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void strings(const std::vector<std::string>& v) {
        u64(v.size());
        for (const auto& s : v) str(s);
    }
    void matrix(const Matrix& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        const RowMatrix r = m;
        raw(r.data(), static_cast<std::size_t>(r.size()) * sizeof(double));
    }

    std::vector<unsigned char> finish() {
        const auto crc = static_cast<std::uint32_t>(crc32(0L, buf_.data(), static_cast<uInt>(buf_.size())));
        u32(crc);
        return std::move(buf_);
    }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    Reader(const std::vector<unsigned char>& bytes, ArtifactType expect) : b_(bytes) {
        if (b_.size() < 16 || std::memcmp(b_.data(), kMagic, 4) != 0) throw FormatError("not a bsqz artifact");
        const std::size_t body = b_.size() - 4;
        std::uint32_t stored = 0;
        std::memcpy(&stored, b_.data() + body, 4);
        const auto crc = static_cast<std::uint32_t>(crc32(0L, b_.data(), static_cast<uInt>(body)));
        end_ = body;
        pos_ = 4;
        const auto version = u32();
        if (version != kArtifactVersion)
            throw FormatError("artifact version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kArtifactVersion) + ")");
        if (crc != stored) throw FormatError("artifact checksum mismatch");
        const auto type = static_cast<ArtifactType>(u32());
        if (type != expect)
            throw FormatError("artifact holds a " + to_string(type) + ", expected a " + to_string(expect));
    }

    void raw(void* p, std::size_t n) {
        if (n > end_ - pos_) throw FormatError("artifact is truncated");
        std::memcpy(p, b_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
    double f64() { double v; raw(&v, 8); return v; }
    std::size_t count() {
        const auto v = u64();
        if (v > end_) throw FormatError("artifact count field is corrupt");
        return static_cast<std::size_t>(v);
    }
    std::string str() {
        std::string s(count(), '\0');
        raw(s.data(), s.size());
        return s;
    }
    std::vector<std::string> strings() {
        std::vector<std::string> v(count());
        for (auto& s : v) s = str();
        return v;
    }
    Matrix matrix() {
        const auto r = u64();
        const auto c = u64();
        if (r && c > (end_ - pos_) / 8 / r) throw FormatError("artifact matrix dimensions are corrupt");
        RowMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
        return m;
    }
    void done() const {
        if (pos_ != end_) throw FormatError("artifact has trailing bytes");
    }

private:
    const std::vector<unsigned char>& b_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
};

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

void put_basis(Writer& w, const CompressionBasis& b) {
    w.u32(static_cast<std::uint32_t>(b.method));
    w.u8(b.nonnegative ? 1 : 0);
    w.str(b.provenance);
    w.f64(b.contraction_margin);
    w.matrix(b.F);
    w.matrix(b.F_dag);
}

CompressionBasis get_basis(Reader& r) {
    CompressionBasis b;
    const auto method = r.u32();
    if (method > static_cast<std::uint32_t>(CompressionMethod::Identity)) throw FormatError("unknown compression method");
    b.method = static_cast<CompressionMethod>(method);
    b.nonnegative = r.u8() != 0;
    b.provenance = r.str();
    b.contraction_margin = r.f64();
    b.F = r.matrix();
    b.F_dag = r.matrix();
    return b;
}

}  // namespace

std::string to_string(ArtifactType t) {
    switch (t) {
        case ArtifactType::BeliefMatrix: return "belief-matrix";
        case ArtifactType::Basis: return "basis";
        case ArtifactType::CompressedModel: return "compressed-model";
        case ArtifactType::ValueFunction: return "value-function";
        case ArtifactType::Model: return "model";
    }
    return "unknown(" + std::to_string(static_cast<std::uint32_t>(t)) + ")";
}

bool has_artifact_magic(std::istream& in) {
    char buf[4] = {};
    in.read(buf, 4);
    return in.gcount() == 4 && std::memcmp(buf, kMagic, 4) == 0;
}

ArtifactType artifact_type(const std::string& path) {
    const auto bytes = read_bytes(path);
    for (auto t : {ArtifactType::BeliefMatrix, ArtifactType::Basis, ArtifactType::CompressedModel,
                   ArtifactType::ValueFunction, ArtifactType::Model}) {
        try {
            Reader r(bytes, t);
            return t;
        } catch (const FormatError& e) {
            if (std::string(e.what()).find("artifact holds") == std::string::npos) throw;
        }
    }
    throw FormatError("unknown artifact type in '" + path + "'");
}

std::vector<unsigned char> encode_artifact(const BeliefMatrix& b) {
    Writer w(ArtifactType::BeliefMatrix);
    w.u64(b.seed);
    w.u64(b.horizon_cap);
    w.matrix(b.columns);
    return w.finish();
}

std::vector<unsigned char> encode_artifact(const CompressionBasis& basis) {
    Writer w(ArtifactType::Basis);
    put_basis(w, basis);
    return w.finish();
}

std::vector<unsigned char> encode_artifact(const CompressedPomdp& c) {
    Writer w(ArtifactType::CompressedModel);
    w.u64(c.n_actions);
    w.u64(c.n_obs);
    w.f64(c.discount);
    w.matrix(c.reward);
    w.u64(c.maps.size());
    for (const auto& m : c.maps) w.matrix(m);
    put_basis(w, c.basis);
    return w.finish();
}

std::vector<unsigned char> encode_artifact(const ValueFunction& v) {
    Writer w(ArtifactType::ValueFunction);
    w.str(v.space);
    w.u64(v.size());
    w.u64(v.dim());
    for (const auto& a : v.vectors) {
        if (a.values.size() != static_cast<Eigen::Index>(v.dim())) throw InvalidArgument("alpha-vectors differ in length");
        w.u64(a.action);
        w.raw(a.values.data(), static_cast<std::size_t>(a.values.size()) * sizeof(double));
    }
    return w.finish();
}

std::vector<unsigned char> encode_artifact(const Pomdp& m) {
    Writer w(ArtifactType::Model);
    w.u64(m.n_states);
    w.u64(m.n_actions);
    w.u64(m.n_obs);
    w.f64(m.discount);
    for (const auto& t : m.transition) w.matrix(t);
    for (const auto& o : m.observation) w.matrix(o);
    w.matrix(m.reward);
    w.matrix(m.initial_belief);
    w.strings(m.state_names);
    w.strings(m.action_names);
    w.strings(m.obs_names);
    return w.finish();
}

BeliefMatrix decode_belief_matrix(const std::vector<unsigned char>& bytes) {
    Reader r(bytes, ArtifactType::BeliefMatrix);
    BeliefMatrix b;
    b.seed = r.u64();
    b.horizon_cap = static_cast<std::size_t>(r.u64());
    b.columns = r.matrix();
    r.done();
    return b;
}

CompressionBasis decode_basis(const std::vector<unsigned char>& bytes) {
    Reader r(bytes, ArtifactType::Basis);
    auto b = get_basis(r);
    r.done();
    return b;
}

CompressedPomdp decode_compressed(const std::vector<unsigned char>& bytes) {
    Reader r(bytes, ArtifactType::CompressedModel);
    CompressedPomdp c;
    c.n_actions = r.count();
    c.n_obs = r.count();
    c.discount = r.f64();
    c.reward = r.matrix();
    c.maps.resize(r.count());
    for (auto& m : c.maps) m = r.matrix();
    c.basis = get_basis(r);
    r.done();
    return c;
}

ValueFunction decode_value_function(const std::vector<unsigned char>& bytes) {
    Reader r(bytes, ArtifactType::ValueFunction);
    ValueFunction v;
    v.space = r.str();
    const auto count = r.count();
    const auto dim = r.count();
    v.vectors.resize(count);
    for (auto& a : v.vectors) {
        a.action = static_cast<std::size_t>(r.u64());
        a.values.resize(static_cast<Eigen::Index>(dim));
        r.raw(a.values.data(), dim * sizeof(double));
    }
    r.done();
    return v;
}

Pomdp decode_pomdp(const std::vector<unsigned char>& bytes) {
    Reader r(bytes, ArtifactType::Model);
    Pomdp m;
    m.n_states = r.count();
    m.n_actions = r.count();
    m.n_obs = r.count();
    m.discount = r.f64();
    m.transition.resize(m.n_actions);
    m.observation.resize(m.n_actions);
    for (auto& t : m.transition) t = r.matrix();
    for (auto& o : m.observation) o = r.matrix();
    m.reward = r.matrix();
    const Matrix b0 = r.matrix();
    if (b0.size()) m.initial_belief = b0.col(0);
    m.state_names = r.strings();
    m.action_names = r.strings();
    m.obs_names = r.strings();
    r.done();
    return m;
}

void save_artifact(const std::string& path, const BeliefMatrix& b) { write_bytes(path, encode_artifact(b)); }
void save_artifact(const std::string& path, const CompressionBasis& b) { write_bytes(path, encode_artifact(b)); }
void save_artifact(const std::string& path, const CompressedPomdp& c) { write_bytes(path, encode_artifact(c)); }
void save_artifact(const std::string& path, const ValueFunction& v) { write_bytes(path, encode_artifact(v)); }
void save_artifact(const std::string& path, const Pomdp& m) { write_bytes(path, encode_artifact(m)); }

BeliefMatrix load_belief_matrix(const std::string& path) { return decode_belief_matrix(read_bytes(path)); }
CompressionBasis load_basis(const std::string& path) { return decode_basis(read_bytes(path)); }
CompressedPomdp load_compressed(const std::string& path) { return decode_compressed(read_bytes(path)); }
ValueFunction load_value_function(const std::string& path) { return decode_value_function(read_bytes(path)); }

Pomdp load_pomdp_artifact(const std::string& path) {
    auto m = decode_pomdp(read_bytes(path));
    require_valid(m);
    return m;
}

std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw InvalidArgument("csv row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ += ',';
        out_ += cells[i];
    }
    out_ += '\n';
    return *this;
}

void CsvWriter::save(const std::string& path) const { write_text_file(path, out_); }

std::string matrix_csv(const Matrix& m, const std::string& prefix) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < m.cols(); ++j) header.push_back(prefix + std::to_string(j));
    CsvWriter w(header);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> cells;
        for (Eigen::Index j = 0; j < m.cols(); ++j) cells.push_back(csv_number(m(i, j)));
        w.row(cells);
    }
    return w.str();
}

std::string value_function_csv(const ValueFunction& v) {
    std::vector<std::string> header{"action"};
    for (std::size_t j = 0; j < v.dim(); ++j) header.push_back("v" + std::to_string(j));
    CsvWriter w(header);
    for (const auto& a : v.vectors) {
        std::vector<std::string> cells{std::to_string(a.action)};
        for (Eigen::Index j = 0; j < a.values.size(); ++j) cells.push_back(csv_number(a.values[j]));
        w.row(cells);
    }
    return w.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace bsqz
