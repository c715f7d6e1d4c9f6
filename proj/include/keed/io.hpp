#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "keed/core.hpp"

namespace keed::io {

// Per-signal description from a WFDB header. Only formats 212 and 16 are
// supported; gain is in ADC units per mV.
struct SignalSpec {
    std::string file;
    int format = 16;
    double gain = 200.0;
    int baseline = 0;
    std::string units = "mV";
    std::string lead;
};

struct WfdbHeader {
    std::string record_name;
    int n_signals = 0;
    double fs = 0.0;
    std::int64_t n_samples = 0;
    std::vector<SignalSpec> signals;
};

// Parses the subset grammar "name n_sigs fs n_samples" followed by one
// per-signal line "file format gain(baseline)/units ... lead". Comment
// lines (#) and blank lines are skipped. Throws std::runtime_error on
// malformed input or an unsupported format code.
WfdbHeader parse_wfdb_header(const std::string& header_text);

// Raw ADC decoding of the multiplexed sample stream (all signals
// interleaved frame by frame). count is the number of values expected.
std::vector<int> decode_format212(const std::vector<std::uint8_t>& bytes, std::int64_t count);
std::vector<int> decode_format16(const std::vector<std::uint8_t>& bytes, std::int64_t count);

// Reads one lead of a WFDB record and converts to physical units:
// (adc - baseline) / gain. Throws on malformed headers, unsupported
// formats, truncated signal bytes, or an out-of-range lead index.
TimeSeriesRecord read_wfdb_record(const std::string& header_text,
                                  const std::vector<std::uint8_t>& signal_bytes,
                                  int lead_index);

struct WfdbAnnotation {
    std::int64_t sample_index = 0;
    int type_code = 0;  // 0..63
    std::string aux;

    bool operator==(const WfdbAnnotation&) const = default;
};

// Decodes the MIT annotation byte stream: 2-byte little-endian words with
// type = w >> 10 and time delta = w & 0x3FF; a zero word terminates.
// Pseudo-code words: 59 (SKIP) consumes a 4-byte jump in PDP-11 order
// (high word first, each little-endian) added to the running time;
// 60/61/62 (NUM/SUB/CHN) are consumed and ignored; 63 (AUX) attaches its
// string to the previous annotation. Throws on a truncated stream or a
// negative cumulative time.
std::vector<WfdbAnnotation> read_wfdb_annotations(const std::vector<std::uint8_t>& bytes);

// One numeric value per line, optionally "index,value". Throws on a
// non-numeric line or an empty file.
TimeSeriesRecord read_csv_record(const std::string& text, double fs,
                                 const std::string& record_id = "csv",
                                 const std::string& lead = "");

// Small file helpers shared by the CLI.
std::string read_text_file(const std::string& path);
std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace keed::io
