#ifndef TOPICLENS_HTTP_HPP
#define TOPICLENS_HTTP_HPP

#include "common.hpp"

#include "httplib.h"

#include <string>
#include <utility>

namespace topiclens::http {

struct Endpoint {
    std::string base; // scheme://host[:port]
    std::string path; // always begins with '/'
};

/** Splits `http://host:port/some/path` into the client base and the request path. */
inline Endpoint split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidArgument("URL without scheme: '" + url + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

/**
 * Turns an HTTP result into a body or a typed error: connection failures, 408, 429 and
 * 5xx are transient, 401/403 are authentication failures, everything else is fatal.
 */
inline std::string expect_ok(const httplib::Result& res, const std::string& what) {
    if (!res) {
        throw TransientError(what + ": " + httplib::to_string(res.error()));
    }
    int status = res->status;
    if (status >= 200 && status < 300) {
        return res->body;
    }
    std::string detail = what + ": HTTP " + std::to_string(status);
    if (status == 401 || status == 403) {
        throw AuthError(detail);
    }
    if (status == 408 || status == 429 || status >= 500) {
        throw TransientError(detail);
    }
    throw Error(detail + ": " + res->body.substr(0, 200));
}

} // namespace topiclens::http

#endif
