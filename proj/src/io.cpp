#include "keed/io.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace keed::io {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end != begin && *end == '\0';
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtoll(begin, &end, 10);
    return end != begin && *end == '\0';
}

// "gain(baseline)/units" with the parenthesized baseline and the unit
// suffix both optional.
void parse_gain_spec(const std::string& spec, SignalSpec& sig) {
    std::string body = spec;
    std::string units;
    if (auto slash = body.find('/'); slash != std::string::npos) {
        units = body.substr(slash + 1);
        body = body.substr(0, slash);
    }
    std::string gain_part = body;
    if (auto open = body.find('('); open != std::string::npos) {
        auto close = body.find(')', open);
        if (close == std::string::npos) throw std::runtime_error("wfdb header: unclosed baseline");
        gain_part = body.substr(0, open);
        std::int64_t baseline = 0;
        if (!parse_int64(body.substr(open + 1, close - open - 1), baseline))
            throw std::runtime_error("wfdb header: bad baseline");
        sig.baseline = static_cast<int>(baseline);
    }
    double gain = 0.0;
    if (!parse_double(gain_part, gain)) throw std::runtime_error("wfdb header: bad gain");
    // WFDB convention: a stored gain of zero means the default 200 adu/mV.
    sig.gain = gain == 0.0 ? 200.0 : gain;
    if (sig.gain <= 0.0) throw std::runtime_error("wfdb header: gain must be > 0");
    if (!units.empty()) sig.units = units;
}

int twos_complement_12bit(int raw) {
    return (raw & 0x800) ? raw - 4096 : raw;
}

}  // namespace

WfdbHeader parse_wfdb_header(const std::string& header_text) {
    std::istringstream ss(header_text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    if (lines.empty()) throw std::runtime_error("wfdb header: empty");

    WfdbHeader hdr;
    auto record_toks = tokenize(lines[0]);
    if (record_toks.size() < 4) throw std::runtime_error("wfdb header: record line needs 4 fields");
    hdr.record_name = record_toks[0];
    std::int64_t n_signals = 0;
    if (!parse_int64(record_toks[1], n_signals) || n_signals < 1)
        throw std::runtime_error("wfdb header: bad signal count");
    hdr.n_signals = static_cast<int>(n_signals);
    // fs may carry a "/counter" suffix; take the leading number.
    if (!parse_double(record_toks[2].substr(0, record_toks[2].find('/')), hdr.fs) || hdr.fs <= 0.0)
        throw std::runtime_error("wfdb header: bad sampling rate");
    if (!parse_int64(record_toks[3], hdr.n_samples) || hdr.n_samples < 1)
        throw std::runtime_error("wfdb header: bad sample count");

    if (static_cast<int>(lines.size()) < 1 + hdr.n_signals)
        throw std::runtime_error("wfdb header: missing signal lines");
    for (int i = 0; i < hdr.n_signals; ++i) {
        auto toks = tokenize(lines[1 + i]);
        if (toks.size() < 3) throw std::runtime_error("wfdb header: short signal line");
        SignalSpec sig;
        sig.file = toks[0];
        std::int64_t fmt = 0;
        if (!parse_int64(toks[1], fmt)) throw std::runtime_error("wfdb header: bad format code");
        if (fmt != 212 && fmt != 16)
            throw std::runtime_error("wfdb header: unsupported format " + toks[1]);
        sig.format = static_cast<int>(fmt);
        parse_gain_spec(toks[2], sig);
        // The description (lead name) is the trailing token when it is not
        // one of the optional numeric fields.
        double dummy;
        if (toks.size() > 3 && !parse_double(toks.back(), dummy)) sig.lead = toks.back();
        if (sig.lead.empty()) sig.lead = "sig" + std::to_string(i);
        hdr.signals.push_back(std::move(sig));
    }
    return hdr;
}

std::vector<int> decode_format212(const std::vector<std::uint8_t>& bytes, std::int64_t count) {
    if (count < 0) throw std::runtime_error("format 212: negative count");
    // Two 12-bit samples per 3 bytes; an odd trailing sample still occupies
    // a full 3-byte group.
    const std::int64_t groups = (count + 1) / 2;
    if (static_cast<std::int64_t>(bytes.size()) < groups * 3)
        throw std::runtime_error("format 212: truncated signal bytes");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t g = 0; g < groups; ++g) {
        const int b0 = bytes[g * 3 + 0];
        const int b1 = bytes[g * 3 + 1];
        const int b2 = bytes[g * 3 + 2];
        const int s1 = b0 | ((b1 & 0x0F) << 8);
        const int s2 = ((b1 & 0xF0) << 4) | b2;
        out.push_back(twos_complement_12bit(s1));
        if (static_cast<std::int64_t>(out.size()) < count) out.push_back(twos_complement_12bit(s2));
    }
    return out;
}

std::vector<int> decode_format16(const std::vector<std::uint8_t>& bytes, std::int64_t count) {
    if (count < 0) throw std::runtime_error("format 16: negative count");
    if (static_cast<std::int64_t>(bytes.size()) < count * 2)
        throw std::runtime_error("format 16: truncated signal bytes");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const int lo = bytes[i * 2];
        const int hi = bytes[i * 2 + 1];
        int v = lo | (hi << 8);
        if (v & 0x8000) v -= 0x10000;
        out.push_back(v);
    }
    return out;
}

TimeSeriesRecord read_wfdb_record(const std::string& header_text,
                                  const std::vector<std::uint8_t>& signal_bytes,
                                  int lead_index) {
    WfdbHeader hdr = parse_wfdb_header(header_text);
    if (lead_index < 0 || lead_index >= hdr.n_signals)
        throw std::runtime_error("read_wfdb_record: lead index out of range");
    // All signals of a record share one format in the supported subset.
    const int format = hdr.signals[lead_index].format;
    for (const auto& sig : hdr.signals) {
        if (sig.format != format)
            throw std::runtime_error("read_wfdb_record: mixed signal formats unsupported");
    }

    const std::int64_t total_values = hdr.n_samples * hdr.n_signals;
    std::vector<int> adc = format == 212 ? decode_format212(signal_bytes, total_values)
                                         : decode_format16(signal_bytes, total_values);

    const SignalSpec& sig = hdr.signals[lead_index];
    TimeSeriesRecord rec;
    rec.fs = hdr.fs;
    rec.record_id = hdr.record_name;
    rec.lead = sig.lead;
    rec.samples.reserve(static_cast<std::size_t>(hdr.n_samples));
    for (std::int64_t i = 0; i < hdr.n_samples; ++i) {
        const int raw = adc[static_cast<std::size_t>(i * hdr.n_signals + lead_index)];
        rec.samples.push_back((raw - sig.baseline) / sig.gain);
    }
    rec.validate();
    return rec;
}

std::vector<WfdbAnnotation> read_wfdb_annotations(const std::vector<std::uint8_t>& bytes) {
    std::vector<WfdbAnnotation> out;
    std::size_t pos = 0;
    std::int64_t time = 0;
    auto next_word = [&](const char* what) -> int {
        if (pos + 1 >= bytes.size())
            throw std::runtime_error(std::string("annotations: truncated ") + what);
        int w = bytes[pos] | (bytes[pos + 1] << 8);
        pos += 2;
        return w;
    };
    while (true) {
        const int w = next_word("stream");
        if (w == 0) break;  // terminator
        const int type = w >> 10;
        const int delta = w & 0x3FF;
        switch (type) {
            case 59: {  // SKIP: 4-byte jump, high 16 bits first
                const int hi = next_word("skip word");
                const int lo = next_word("skip word");
                const std::int64_t jump =
                    static_cast<std::int32_t>((static_cast<std::uint32_t>(hi) << 16) |
                                              static_cast<std::uint32_t>(lo));
                time += jump + delta;
                break;
            }
            case 60:  // NUM
            case 61:  // SUB
            case 62:  // CHN
                break;
            case 63: {  // AUX: delta = byte count, padded to even
                std::size_t len = static_cast<std::size_t>(delta);
                if (pos + len > bytes.size()) throw std::runtime_error("annotations: truncated aux");
                std::string aux(bytes.begin() + pos, bytes.begin() + pos + len);
                if (!aux.empty() && aux.back() == '\0') aux.pop_back();
                pos += len + (len % 2);
                if (!out.empty()) out.back().aux = aux;
                break;
            }
            default: {
                time += delta;
                if (time < 0) throw std::runtime_error("annotations: negative cumulative time");
                out.push_back(WfdbAnnotation{time, type, ""});
                break;
            }
        }
        if (time < 0) throw std::runtime_error("annotations: negative cumulative time");
    }
    return out;
}

TimeSeriesRecord read_csv_record(const std::string& text, double fs,
                                 const std::string& record_id, const std::string& lead) {
    TimeSeriesRecord rec;
    rec.fs = fs;
    rec.record_id = record_id;
    rec.lead = lead;
    std::istringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string value_part = line;
        if (auto comma = line.find(','); comma != std::string::npos)
            value_part = line.substr(comma + 1);
        double v = 0.0;
        if (!parse_double(value_part, v))
            throw std::runtime_error("csv: non-numeric value at line " + std::to_string(line_no));
        rec.samples.push_back(v);
    }
    if (rec.samples.empty()) throw std::runtime_error("csv: empty file");
    rec.validate();
    return rec;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                     std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f << content;
}

void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace keed::io
