#ifndef TOPICLENS_COMMON_HPP
#define TOPICLENS_COMMON_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

/**
 * @file common.hpp
 *
 * @brief Error types, diagnostics sink, dense matrix and a small parallel-for helper.
 */

namespace topiclens {

/**
 * Base class for all errors raised by the library.
 */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Input data violates a documented precondition (empty keyword set, start > end, ...). */
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/** A file could not be parsed, or failed its integrity check. */
class FormatError : public Error {
public:
    using Error::Error;
};

class CorruptFile : public FormatError {
public:
    using FormatError::FormatError;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t actual, const std::string& context = "")
        : Error("dimension mismatch" + (context.empty() ? std::string() : " in " + context) + ": expected " +
                std::to_string(expected) + ", got " + std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    std::size_t expected() const { return expected_; }
    std::size_t actual() const { return actual_; }

private:
    std::size_t expected_, actual_;
};

/** Network or provider failure that may succeed on retry. */
class TransientError : public Error {
public:
    using Error::Error;
};

/** Provider rejected credentials; never retried. */
class AuthError : public Error {
public:
    using Error::Error;
};

enum class LogLevel { debug, info, warning, error };

inline const char* to_string(LogLevel level) {
    switch (level) {
        case LogLevel::debug: return "debug";
        case LogLevel::info: return "info";
        case LogLevel::warning: return "warning";
        case LogLevel::error: return "error";
    }
    return "info";
}

using LogSink = std::function<void(LogLevel, std::string_view)>;

/**
 * Process-wide diagnostics sink. Defaults to discarding everything; the CLI installs
 * a stderr writer and tests install collectors.
 */
inline LogSink& log_sink() {
    static LogSink sink = [](LogLevel, std::string_view) {};
    return sink;
}

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

inline void log(LogLevel level, std::string_view message) {
    std::lock_guard<std::mutex> lock(log_mutex());
    log_sink()(level, message);
}

inline void warn(std::string_view message) { log(LogLevel::warning, message); }

/**
 * Dense row-major matrix with value semantics.
 */
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw InvalidArgument("matrix storage size does not match its shape");
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return values_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> values_;
};

/**
 * Runs `fn(begin, end)` over contiguous chunks of [0, n). With workers <= 1 everything
 * runs on the calling thread, in order.
 */
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) {
        return;
    }
    std::size_t nthreads = workers <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    if (nthreads == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> failures(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        std::size_t begin = t * chunk, end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        threads.emplace_back([&, t, begin, end]() {
            try {
                fn(begin, end);
            } catch (...) {
                failures[t] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) {
        th.join();
    }
    for (auto& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }
}

} // namespace topiclens

#endif
