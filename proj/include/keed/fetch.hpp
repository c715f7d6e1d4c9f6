#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace keed::fetch {

// URL template plus the files to pull. Checksums (hex SHA-256 keyed by
// file name) are verified when configured; files without one are accepted
// as-is.
struct FetchSpec {
    std::string base_url;  // e.g. https://example.org/files/db/1.0.0
    std::vector<std::string> files;
    std::map<std::string, std::string> sha256;
};

// Catalog entries for the PhysioNet datasets this tool evaluates on. The
// data itself is never bundled; availability and licensing are the user's
// responsibility.
std::map<std::string, FetchSpec> default_catalog();

// Downloads spec.files into dest_dir. Existing files that verify (or that
// have no configured checksum) are skipped without touching the network.
// Partial downloads land in a .part file and are removed on failure.
// Returns 0 on success, 3 on network failure or checksum mismatch.
int fetch_dataset(const FetchSpec& spec, const std::string& dest_dir, std::ostream& log);

// Hex SHA-256, or an empty string when built without OpenSSL.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace keed::fetch
