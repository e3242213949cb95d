#pragma once

#include "core/basis.hpp"
#include "core/compressed.hpp"
#include "core/pomdp.hpp"
#include "core/sampling.hpp"
#include "core/solver.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace bsqz {

// Native binary artifacts: "BSQZ", u32 version, u32 type tag, payload, u32 CRC32 of
// everything before it. Little-endian; matrices are u64 rows, u64 cols, row-major f64.

inline constexpr std::uint32_t kArtifactVersion = 1;

enum class ArtifactType : std::uint32_t {
    BeliefMatrix = 1,
    Basis = 2,
    CompressedModel = 3,
    ValueFunction = 4,
    Model = 5,
};

std::string to_string(ArtifactType t);

/// True when the stream starts with the artifact magic. Consumes up to 4 bytes.
bool has_artifact_magic(std::istream& in);

/// Type tag of a stored artifact, after checking magic, version and checksum.
ArtifactType artifact_type(const std::string& path);

void save_artifact(const std::string& path, const BeliefMatrix& b);
void save_artifact(const std::string& path, const CompressionBasis& basis);
void save_artifact(const std::string& path, const CompressedPomdp& c);
void save_artifact(const std::string& path, const ValueFunction& v);
void save_artifact(const std::string& path, const Pomdp& m);

BeliefMatrix load_belief_matrix(const std::string& path);
CompressionBasis load_basis(const std::string& path);
CompressedPomdp load_compressed(const std::string& path);
ValueFunction load_value_function(const std::string& path);
Pomdp load_pomdp_artifact(const std::string& path);

/// In-memory encoding, exposed for checksum and round-trip tests.
std::vector<unsigned char> encode_artifact(const BeliefMatrix& b);
std::vector<unsigned char> encode_artifact(const CompressionBasis& basis);
std::vector<unsigned char> encode_artifact(const CompressedPomdp& c);
std::vector<unsigned char> encode_artifact(const ValueFunction& v);
std::vector<unsigned char> encode_artifact(const Pomdp& m);

BeliefMatrix decode_belief_matrix(const std::vector<unsigned char>& bytes);
CompressionBasis decode_basis(const std::vector<unsigned char>& bytes);
CompressedPomdp decode_compressed(const std::vector<unsigned char>& bytes);
ValueFunction decode_value_function(const std::vector<unsigned char>& bytes);
Pomdp decode_pomdp(const std::vector<unsigned char>& bytes);

// CSV: header row, comma separated, LF line endings, 17 significant digits.

std::string csv_number(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& row(const std::vector<std::string>& cells);
    std::string str() const { return out_; }
    void save(const std::string& path) const;

private:
    std::size_t width_;
    std::string out_;
};

/// Columns named <prefix>0, <prefix>1, ...; one CSV row per matrix row.
std::string matrix_csv(const Matrix& m, const std::string& prefix);

/// One row per alpha-vector: action, v0, v1, ...
std::string value_function_csv(const ValueFunction& v);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace bsqz
