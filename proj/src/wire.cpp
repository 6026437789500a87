#include "qnet/wire.hpp"

#include <bit>
#include <cstring>

namespace qnet::netharness {

namespace {

enum class FieldType : std::uint8_t { i64 = 0, f64 = 1, u32 = 2, u64 = 3, i64_array = 4, u32_array = 5 };

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { raw(&v, 2); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void i64(std::int64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }

    void name(const char* s) {
        const std::size_t len = std::strlen(s);
        u8(static_cast<std::uint8_t>(len));
        out_.insert(out_.end(), s, s + len);
    }

    void field_i64(const char* n, std::int64_t v) {
        name(n);
        u8(static_cast<std::uint8_t>(FieldType::i64));
        i64(v);
    }
    void field_f64(const char* n, double v) {
        name(n);
        u8(static_cast<std::uint8_t>(FieldType::f64));
        f64(v);
    }
    void field_u64(const char* n, std::uint64_t v) {
        name(n);
        u8(static_cast<std::uint8_t>(FieldType::u64));
        u64(v);
    }
    void field_i64_array(const char* n, const std::vector<std::int64_t>& v) {
        name(n);
        u8(static_cast<std::uint8_t>(FieldType::i64_array));
        u64(v.size());
        raw(v.data(), v.size() * 8);
    }
    void field_u32_array(const char* n, const std::vector<std::uint32_t>& v) {
        name(n);
        u8(static_cast<std::uint8_t>(FieldType::u32_array));
        u64(v.size());
        raw(v.data(), v.size() * 4);
    }

private:
    void raw(const void* p, std::size_t bytes) {
        // Little-endian hosts only; asserted at build time below.
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + bytes);
    }
    std::vector<std::uint8_t>& out_;
};

static_assert(std::endian::native == std::endian::little,
              "wire format assumes a little-endian host");

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

    bool done() const { return pos_ >= in_.size(); }

    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() { return fixed<std::uint16_t>(); }
    std::uint32_t u32() { return fixed<std::uint32_t>(); }
    std::uint64_t u64() { return fixed<std::uint64_t>(); }
    std::int64_t i64() { return fixed<std::int64_t>(); }
    double f64() { return fixed<double>(); }

    std::string name() {
        const std::size_t len = u8();
        need(len);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    template <typename T>
    std::vector<T> array() {
        const std::uint64_t n = u64();
        need(n * sizeof(T));
        std::vector<T> v(n);
        std::memcpy(v.data(), in_.data() + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
        return v;
    }

private:
    template <typename T>
    T fixed() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw WireError("truncated frame");
    }
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_message(const ProtocolMessage& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(64);
    Writer w(out);
    w.u8(kWireVersion);
    w.u8(static_cast<std::uint8_t>(msg.kind));
    w.u32(msg.epoch_index);
    w.u8(static_cast<std::uint8_t>(msg.sender));

    switch (msg.kind) {
        case MessageKind::tag_digest: {
            const auto& b = std::get<TagDigest>(msg.body);
            w.u16(2);
            w.field_i64("detector", b.detector);
            w.field_i64_array("tags", b.tags);
            break;
        }
        case MessageKind::twtt_report: {
            const auto& b = std::get<TwttReport>(msg.body);
            w.u16(7);
            w.field_i64("direction", b.direction);
            w.field_i64("fit_valid", b.fit_valid ? 1 : 0);
            w.field_f64("center_ps", b.center_ps);
            w.field_f64("fwhm_ps", b.fwhm_ps);
            w.field_f64("amplitude", b.amplitude);
            w.field_f64("background", b.background);
            w.field_f64("uncertainty_ps", b.uncertainty_ps);
            break;
        }
        case MessageKind::sift_announce: {
            const auto& b = std::get<SiftAnnounce>(msg.body);
            w.u16(2);
            w.field_i64_array("frame_no", b.frame_no);
            w.field_u32_array("bin_no", b.bin_no);
            break;
        }
        case MessageKind::batch_confirm: {
            const auto& b = std::get<BatchConfirm>(msg.body);
            w.u16(4);
            w.field_u64("pair_count", b.pair_count);
            w.field_f64("qber_check", b.qber_check);
            w.field_i64_array("check_frames", b.check_frames);
            w.field_u32_array("check_slots", b.check_slots);
            break;
        }
    }
    return out;
}

ProtocolMessage decode_message(const std::vector<std::uint8_t>& frame) {
    Reader r(frame);
    if (r.u8() != kWireVersion) throw WireError("unsupported wire version");
    ProtocolMessage msg;
    msg.kind = static_cast<MessageKind>(r.u8());
    msg.epoch_index = r.u32();
    msg.sender = static_cast<NodeId>(r.u8());
    const std::uint16_t n_fields = r.u16();

    auto read_fields = [&](auto&& handler) {
        for (std::uint16_t i = 0; i < n_fields; ++i) {
            const std::string field = r.name();
            const auto type = static_cast<FieldType>(r.u8());
            handler(field, type);
        }
    };

    switch (msg.kind) {
        case MessageKind::tag_digest: {
            TagDigest b;
            read_fields([&](const std::string& f, FieldType t) {
                if (f == "detector" && t == FieldType::i64)
                    b.detector = static_cast<std::uint16_t>(r.i64());
                else if (f == "tags" && t == FieldType::i64_array)
                    b.tags = r.array<std::int64_t>();
                else
                    throw WireError("unexpected field in TagDigest: " + f);
            });
            msg.body = std::move(b);
            break;
        }
        case MessageKind::twtt_report: {
            TwttReport b;
            read_fields([&](const std::string& f, FieldType t) {
                if (f == "direction" && t == FieldType::i64) b.direction = static_cast<std::uint8_t>(r.i64());
                else if (f == "fit_valid" && t == FieldType::i64) b.fit_valid = r.i64() != 0;
                else if (f == "center_ps" && t == FieldType::f64) b.center_ps = r.f64();
                else if (f == "fwhm_ps" && t == FieldType::f64) b.fwhm_ps = r.f64();
                else if (f == "amplitude" && t == FieldType::f64) b.amplitude = r.f64();
                else if (f == "background" && t == FieldType::f64) b.background = r.f64();
                else if (f == "uncertainty_ps" && t == FieldType::f64) b.uncertainty_ps = r.f64();
                else throw WireError("unexpected field in TwttReport: " + f);
            });
            msg.body = std::move(b);
            break;
        }
        case MessageKind::sift_announce: {
            SiftAnnounce b;
            read_fields([&](const std::string& f, FieldType t) {
                if (f == "frame_no" && t == FieldType::i64_array) b.frame_no = r.array<std::int64_t>();
                else if (f == "bin_no" && t == FieldType::u32_array) b.bin_no = r.array<std::uint32_t>();
                else throw WireError("unexpected field in SiftAnnounce: " + f);
            });
            msg.body = std::move(b);
            break;
        }
        case MessageKind::batch_confirm: {
            BatchConfirm b;
            read_fields([&](const std::string& f, FieldType t) {
                if (f == "pair_count" && t == FieldType::u64) b.pair_count = r.u64();
                else if (f == "qber_check" && t == FieldType::f64) b.qber_check = r.f64();
                else if (f == "check_frames" && t == FieldType::i64_array) b.check_frames = r.array<std::int64_t>();
                else if (f == "check_slots" && t == FieldType::u32_array) b.check_slots = r.array<std::uint32_t>();
                else throw WireError("unexpected field in BatchConfirm: " + f);
            });
            msg.body = std::move(b);
            break;
        }
        default:
            throw WireError("unknown message kind");
    }
    return msg;
}

std::vector<std::string> field_names(const std::vector<std::uint8_t>& frame) {
    Reader r(frame);
    r.u8();  // version
    r.u8();  // kind
    r.u32();
    r.u8();
    const std::uint16_t n_fields = r.u16();
    std::vector<std::string> names;
    for (std::uint16_t i = 0; i < n_fields; ++i) {
        names.push_back(r.name());
        const auto type = static_cast<FieldType>(r.u8());
        switch (type) {
            case FieldType::i64: r.i64(); break;
            case FieldType::f64: r.f64(); break;
            case FieldType::u32: r.u32(); break;
            case FieldType::u64: r.u64(); break;
            case FieldType::i64_array: r.array<std::int64_t>(); break;
            case FieldType::u32_array: r.array<std::uint32_t>(); break;
            default: throw WireError("unknown field type");
        }
    }
    return names;
}

}  // namespace qnet::netharness
