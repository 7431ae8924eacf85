#pragma once

// Streaming reader/writer for LOBSTER orderbook and message files.
//
// Orderbook file: headerless CSV, 4L integer columns per row laid out as
//   ask_price_1, ask_size_1, bid_price_1, bid_size_1, ..., ask_price_L, ...
// Message file: headerless CSV `time,type,order_id,size,price,direction`.
// Prices are integers in units of 1e-4 USD and are never parsed as floats.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lobpred {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

struct Timestamp {
    std::int64_t seconds = 0;  // after midnight
    std::int32_t nanos = 0;    // [0, 1e9)

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

    /// Total nanoseconds after midnight.
    std::int64_t total_nanos() const noexcept { return seconds * 1'000'000'000LL + nanos; }
    static Timestamp from_nanos(std::int64_t ns);
};

/// Formats as `<seconds>.<9 digits>`.
std::string to_string(const Timestamp& t);

/// Price in units of 1e-4 USD.
struct PriceTicks {
    std::int64_t value = 0;

    friend auto operator<=>(const PriceTicks&, const PriceTicks&) = default;
    static constexpr std::int64_t kPerDollar = 10'000;
    double dollars() const noexcept { return static_cast<double>(value) / kPerDollar; }
};

inline constexpr std::int64_t kAskSentinel = 9'999'999'999LL;
inline constexpr std::int64_t kBidSentinel = -9'999'999'999LL;

using RawBookRow = std::vector<std::int64_t>;

enum class EventType : std::uint8_t {
    Submission = 1,
    PartialCancel = 2,
    Deletion = 3,
    VisibleExecution = 4,
    HiddenExecution = 5,
    Cross = 6,
    Halt = 7,
};

struct MessageEvent {
    Timestamp time;
    EventType event_type = EventType::Submission;
    std::int64_t order_id = 0;
    std::int64_t size = 0;
    PriceTicks price;
    int direction = 1;  // -1 sell, +1 buy

    friend bool operator==(const MessageEvent&, const MessageEvent&) = default;
};

struct ParseWarning {
    std::size_t line = 0;
    std::string message;
};

struct MessageFile {
    std::vector<MessageEvent> events;
    std::vector<ParseWarning> warnings;
};

/// Parses `<digits>` or `<digits>.<1..9 digits>` exactly. `line` and
/// `column` only feed the error context.
Timestamp parse_timestamp(std::string_view text, std::size_t line = 0, std::size_t column = 1);

/// Pull-style orderbook reader. Holds at most one line in memory.
class OrderbookReader {
public:
    static constexpr std::size_t kDefaultMaxLineBytes = 1 << 16;

    OrderbookReader(std::istream& in, std::size_t levels,
                    std::size_t max_line_bytes = kDefaultMaxLineBytes);

    /// Next row, or nullopt at end of stream.
    std::optional<RawBookRow> next();
    std::size_t line_number() const noexcept { return line_; }

private:
    std::istream& in_;
    std::size_t levels_;
    std::size_t max_line_bytes_;
    std::size_t line_ = 0;
    std::string buffer_;
};

/// Pull-style message reader; ordering violations are collected as warnings.
class MessageReader {
public:
    explicit MessageReader(std::istream& in);

    std::optional<MessageEvent> next();
    const std::vector<ParseWarning>& warnings() const noexcept { return warnings_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::string buffer_;
    std::optional<Timestamp> last_time_;
    std::vector<ParseWarning> warnings_;
};

std::vector<RawBookRow> parse_orderbook_file(std::istream& in, std::size_t levels);
MessageFile parse_message_file(std::istream& in);

/// Writes rows in LOBSTER layout, one per line.
void write_orderbook(std::ostream& out, std::span<const RawBookRow> rows, std::size_t levels);
std::string serialize_orderbook(std::span<const RawBookRow> rows, std::size_t levels);

void write_messages(std::ostream& out, std::span<const MessageEvent> events);

/// Pairs message i with orderbook row i (row i is the book state after message i).
std::vector<std::pair<MessageEvent, RawBookRow>> align_messages_books(
    std::span<const MessageEvent> messages, std::span<const RawBookRow> rows);

}  // namespace lobpred
