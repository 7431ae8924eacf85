#include "lobpred/lobster_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace lobpred {

namespace {

std::string with_context(const std::string& what, std::size_t line, std::size_t column) {
    std::ostringstream os;
    os << "line " << line << ", column " << column << ": " << what;
    return os.str();
}

// Reads one line (without the terminator) into `out`. Returns false at EOF
// with nothing read.
bool read_line(std::istream& in, std::string& out, std::size_t max_bytes, std::size_t line_no) {
    out.clear();
    std::streambuf* sb = in.rdbuf();
    bool any = false;
    for (;;) {
        const int c = sb->sbumpc();
        if (c == std::char_traits<char>::eof()) {
            in.setstate(std::ios::eofbit);
            break;
        }
        any = true;
        if (c == '\n') break;
        if (out.size() >= max_bytes) {
            throw ParseError("line exceeds " + std::to_string(max_bytes) + " bytes", line_no, out.size() + 1);
        }
        out.push_back(static_cast<char>(c));
    }
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return any;
}

struct Field {
    std::string_view text;
    std::size_t column;  // 1-based byte offset of the field
};

void split_fields(std::string_view line, std::vector<Field>& out) {
    out.clear();
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back({line.substr(start), start + 1});
            return;
        }
        out.push_back({line.substr(start, comma - start), start + 1});
        start = comma + 1;
    }
}

std::int64_t parse_int(const Field& f, std::size_t line) {
    std::int64_t v = 0;
    const char* first = f.text.data();
    const char* last = first + f.text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) {
        throw ParseError("expected integer, got '" + std::string(f.text) + "'", line, f.column);
    }
    return v;
}

void append_int(std::string& out, std::int64_t v) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(with_context(what, line, column)), line_(line), column_(column) {}

Timestamp Timestamp::from_nanos(std::int64_t ns) {
    return Timestamp{ns / 1'000'000'000LL, static_cast<std::int32_t>(ns % 1'000'000'000LL)};
}

std::string to_string(const Timestamp& t) {
    std::string s = std::to_string(t.seconds);
    std::string frac = std::to_string(t.nanos);
    s.push_back('.');
    s.append(9 - frac.size(), '0');
    s += frac;
    return s;
}

Timestamp parse_timestamp(std::string_view text, std::size_t line, std::size_t column) {
    const std::size_t dot = text.find('.');
    const std::string_view whole = text.substr(0, dot);
    if (whole.empty()) throw ParseError("timestamp has no integer part", line, column);
    Timestamp t;
    for (std::size_t i = 0; i < whole.size(); ++i) {
        const char c = whole[i];
        if (c < '0' || c > '9') {
            throw ParseError("invalid character in timestamp '" + std::string(text) + "'", line, column + i);
        }
        if (t.seconds > (INT64_MAX - 9) / 10) throw ParseError("timestamp overflow", line, column + i);
        t.seconds = t.seconds * 10 + (c - '0');
    }
    if (dot == std::string_view::npos) return t;

    const std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) {
        throw ParseError("timestamp fraction must have 1..9 digits", line, column + dot + 1);
    }
    std::int32_t nanos = 0;
    for (std::size_t i = 0; i < frac.size(); ++i) {
        const char c = frac[i];
        if (c < '0' || c > '9') {
            throw ParseError("invalid character in timestamp '" + std::string(text) + "'", line,
                             column + dot + 1 + i);
        }
        nanos = nanos * 10 + (c - '0');
    }
    for (std::size_t i = frac.size(); i < 9; ++i) nanos *= 10;
    t.nanos = nanos;
    return t;
}

OrderbookReader::OrderbookReader(std::istream& in, std::size_t levels, std::size_t max_line_bytes)
    : in_(in), levels_(levels), max_line_bytes_(max_line_bytes) {
    if (levels == 0) throw std::invalid_argument("levels must be positive");
}

std::optional<RawBookRow> OrderbookReader::next() {
    std::vector<Field> fields;
    for (;;) {
        if (!read_line(in_, buffer_, max_line_bytes_, line_ + 1)) return std::nullopt;
        ++line_;
        if (!buffer_.empty()) break;
    }
    split_fields(buffer_, fields);
    const std::size_t expected = 4 * levels_;
    if (fields.size() != expected) {
        throw ParseError("expected " + std::to_string(expected) + " fields, got " + std::to_string(fields.size()),
                         line_, 1);
    }
    RawBookRow row(expected);
    for (std::size_t i = 0; i < expected; ++i) row[i] = parse_int(fields[i], line_);
    return row;
}

MessageReader::MessageReader(std::istream& in) : in_(in) {}

std::optional<MessageEvent> MessageReader::next() {
    for (;;) {
        if (!read_line(in_, buffer_, OrderbookReader::kDefaultMaxLineBytes, line_ + 1)) return std::nullopt;
        ++line_;
        if (!buffer_.empty()) break;
    }
    std::vector<Field> fields;
    split_fields(buffer_, fields);
    if (fields.size() != 6) {
        throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), line_, 1);
    }

    MessageEvent ev;
    ev.time = parse_timestamp(fields[0].text, line_, fields[0].column);

    const std::int64_t type = parse_int(fields[1], line_);
    if (type < 1 || type > 7) {
        throw ParseError("event type must be in 1..7, got " + std::to_string(type), line_, fields[1].column);
    }
    ev.event_type = static_cast<EventType>(type);
    ev.order_id = parse_int(fields[2], line_);

    ev.size = parse_int(fields[3], line_);
    // Halt indicators carry size 0 in LOBSTER files.
    const bool halt = ev.event_type == EventType::Halt;
    if (ev.size < 0 || (ev.size == 0 && !halt)) {
        throw ParseError("size must be positive, got " + std::to_string(ev.size), line_, fields[3].column);
    }
    ev.price = PriceTicks{parse_int(fields[4], line_)};

    const std::int64_t dir = parse_int(fields[5], line_);
    if (dir != -1 && dir != 1) {
        throw ParseError("direction must be -1 or 1, got " + std::to_string(dir), line_, fields[5].column);
    }
    ev.direction = static_cast<int>(dir);

    if (last_time_ && ev.time < *last_time_) {
        warnings_.push_back({line_, "timestamp " + to_string(ev.time) + " precedes previous " +
                                        to_string(*last_time_)});
    }
    last_time_ = ev.time;
    return ev;
}

std::vector<RawBookRow> parse_orderbook_file(std::istream& in, std::size_t levels) {
    OrderbookReader reader(in, levels);
    std::vector<RawBookRow> rows;
    while (auto row = reader.next()) rows.push_back(std::move(*row));
    return rows;
}

MessageFile parse_message_file(std::istream& in) {
    MessageReader reader(in);
    MessageFile file;
    while (auto ev = reader.next()) file.events.push_back(*ev);
    file.warnings = reader.warnings();
    return file;
}

void write_orderbook(std::ostream& out, std::span<const RawBookRow> rows, std::size_t levels) {
    const std::size_t expected = 4 * levels;
    std::string line;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != expected) {
            throw std::invalid_argument("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                                        " fields, expected " + std::to_string(expected));
        }
        line.clear();
        for (std::size_t i = 0; i < expected; ++i) {
            if (i) line.push_back(',');
            append_int(line, rows[r][i]);
        }
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
}

std::string serialize_orderbook(std::span<const RawBookRow> rows, std::size_t levels) {
    std::ostringstream os;
    write_orderbook(os, rows, levels);
    return std::move(os).str();
}

void write_messages(std::ostream& out, std::span<const MessageEvent> events) {
    for (const auto& ev : events) {
        out << to_string(ev.time) << ',' << static_cast<int>(ev.event_type) << ',' << ev.order_id << ','
            << ev.size << ',' << ev.price.value << ',' << ev.direction << '\n';
    }
}

std::vector<std::pair<MessageEvent, RawBookRow>> align_messages_books(std::span<const MessageEvent> messages,
                                                                       std::span<const RawBookRow> rows) {
    if (messages.size() != rows.size()) {
        throw std::invalid_argument("message/orderbook length mismatch: " + std::to_string(messages.size()) +
                                    " vs " + std::to_string(rows.size()));
    }
    std::vector<std::pair<MessageEvent, RawBookRow>> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out.emplace_back(messages[i], rows[i]);
    return out;
}

}  // namespace lobpred
