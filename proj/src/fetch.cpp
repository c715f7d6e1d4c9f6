#include "keed/fetch.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "httplib.h"

#ifdef KEED_HAVE_OPENSSL
#include <openssl/evp.h>
#endif

namespace keed::fetch {

namespace fs = std::filesystem;

std::map<std::string, FetchSpec> default_catalog() {
    std::map<std::string, FetchSpec> catalog;
    // Training source in the original setup; annotated beats live in the
    // .q1c/.pu annotation files.
    catalog["qtdb"] = FetchSpec{"https://physionet.org/files/qtdb/1.0.0", {"RECORDS"}, {}};
    // P-wave annotation reference set (signals come from mitdb).
    catalog["pwave"] = FetchSpec{"https://physionet.org/files/pwave/1.0.0", {"RECORDS"}, {}};
    catalog["mitdb"] = FetchSpec{"https://physionet.org/files/mitdb/1.0.0", {"RECORDS"}, {}};
    catalog["but-pdb"] = FetchSpec{"https://physionet.org/files/but-pdb/1.0.0", {"RECORDS"}, {}};
    return catalog;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
#ifdef KEED_HAVE_OPENSSL
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) return "";
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0F]);
    }
    return out;
#else
    (void)bytes;
    return "";
#endif
}

namespace {

struct ParsedUrl {
    bool https = false;
    std::string host;
    int port = 0;
    std::string path;  // leading slash, no trailing slash
};

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        out.https = true;
        rest = url.substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
    } else {
        throw std::runtime_error("fetch: unsupported URL scheme in " + url);
    }
    const auto slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "" : rest.substr(slash);
    if (const auto colon = hostport.find(':'); colon != std::string::npos) {
        out.port = std::stoi(hostport.substr(colon + 1));
        out.host = hostport.substr(0, colon);
    } else {
        out.host = hostport;
        out.port = out.https ? 443 : 80;
    }
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

bool verify_file(const fs::path& path, const FetchSpec& spec, const std::string& name) {
    const auto it = spec.sha256.find(name);
    if (it == spec.sha256.end()) return fs::exists(path);
    if (!fs::exists(path)) return false;
    std::ifstream f(path, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    const std::string digest = sha256_hex(bytes);
    if (digest.empty()) throw std::runtime_error("fetch: checksum configured but SHA-256 unavailable");
    return digest == it->second;
}

}  // namespace

int fetch_dataset(const FetchSpec& spec, const std::string& dest_dir, std::ostream& log) {
    fs::create_directories(dest_dir);
    ParsedUrl url = parse_url(spec.base_url);

    // Files already present and verified are never re-requested, so a
    // fully populated directory needs no network at all.
    std::vector<std::string> missing;
    for (const std::string& name : spec.files) {
        const fs::path target = fs::path(dest_dir) / name;
        if (verify_file(target, spec, name)) {
            log << "fetch: " << name << " already present\n";
        } else {
            missing.push_back(name);
        }
    }
    if (missing.empty()) return 0;

#ifndef KEED_HAVE_OPENSSL
    if (url.https) {
        log << "fetch: built without TLS support; cannot fetch " << spec.base_url << "\n";
        return 3;
    }
#endif

    auto get = [&](const std::string& path, std::string& body) -> bool {
#ifdef KEED_HAVE_OPENSSL
        if (url.https) {
            httplib::SSLClient client(url.host, url.port);
            client.set_follow_location(true);
            auto res = client.Get(path.c_str());
            if (!res || res->status != 200) return false;
            body = res->body;
            return true;
        }
#endif
        httplib::Client client(url.host, url.port);
        client.set_follow_location(true);
        auto res = client.Get(path.c_str());
        if (!res || res->status != 200) return false;
        body = res->body;
        return true;
    };

    for (const std::string& name : missing) {
        const fs::path target = fs::path(dest_dir) / name;
        const fs::path part = target.string() + ".part";
        std::string body;
        if (!get(url.path + "/" + name, body)) {
            log << "fetch: download failed for " << name << "\n";
            std::error_code ec;
            fs::remove(part, ec);
            return 3;
        }
        {
            std::ofstream f(part, std::ios::binary);
            f.write(body.data(), static_cast<std::streamsize>(body.size()));
        }
        const auto it = spec.sha256.find(name);
        if (it != spec.sha256.end()) {
            std::vector<std::uint8_t> bytes(body.begin(), body.end());
            if (sha256_hex(bytes) != it->second) {
                log << "fetch: checksum mismatch for " << name << "\n";
                std::error_code ec;
                fs::remove(part, ec);
                return 3;
            }
        }
        fs::rename(part, target);
        log << "fetch: downloaded " << name << " (" << body.size() << " bytes)\n";
    }
    return 0;
}

}  // namespace keed::fetch
