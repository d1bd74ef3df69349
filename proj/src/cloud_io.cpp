#include "regbench/cloud_io.h"

#include <algorithm>
#include <bit>
#include <functional>
#include <limits>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "regbench/error.h"

namespace regbench {

namespace {

static_assert(std::endian::native == std::endian::little, "binary PCD I/O assumes a little-endian host");

struct FieldDesc {
    std::string name;
    char type = 'F';
    int size = 4;
    int count = 1;
};

struct Table {
    std::vector<FieldDesc> fields;
    std::vector<std::vector<double>> columns;  // per field, points * count values
    std::size_t points = 0;
};

[[noreturn]] void parse_error(const std::string& message) { throw Error(ErrorClass::Parse, message); }

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

bool is_packed_color(const FieldDesc& f) { return f.name == "rgb" || f.name == "rgba"; }

bool valid_type(char type, int size) {
    if (type == 'F') return size == 4 || size == 8;
    if (type == 'I' || type == 'U') return size == 1 || size == 2 || size == 4 || size == 8;
    return false;
}

double decode_binary(const char* p, const FieldDesc& f) {
    switch (f.type) {
        case 'F':
            if (f.size == 4) {
                if (is_packed_color(f)) {
                    std::uint32_t bits;
                    std::memcpy(&bits, p, 4);
                    return static_cast<double>(bits);
                }
                float v;
                std::memcpy(&v, p, 4);
                return v;
            } else {
                double v;
                std::memcpy(&v, p, 8);
                return v;
            }
        case 'I': {
            switch (f.size) {
                case 1: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
                case 2: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
                case 4: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
                default: { std::int64_t v; std::memcpy(&v, p, 8); return static_cast<double>(v); }
            }
        }
        default: {
            switch (f.size) {
                case 1: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
                case 2: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
                case 4: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
                default: { std::uint64_t v; std::memcpy(&v, p, 8); return static_cast<double>(v); }
            }
        }
    }
}

void encode_binary(std::string& out, double value, const FieldDesc& f) {
    char buf[8];
    switch (f.type) {
        case 'F':
            if (f.size == 4) {
                if (is_packed_color(f)) {
                    const auto bits = static_cast<std::uint32_t>(value);
                    std::memcpy(buf, &bits, 4);
                } else {
                    const auto v = static_cast<float>(value);
                    std::memcpy(buf, &v, 4);
                }
            } else {
                std::memcpy(buf, &value, 8);
            }
            break;
        case 'I': {
            const auto v = static_cast<std::int64_t>(value);
            switch (f.size) {
                case 1: { auto x = static_cast<std::int8_t>(v); std::memcpy(buf, &x, 1); break; }
                case 2: { auto x = static_cast<std::int16_t>(v); std::memcpy(buf, &x, 2); break; }
                case 4: { auto x = static_cast<std::int32_t>(v); std::memcpy(buf, &x, 4); break; }
                default: std::memcpy(buf, &v, 8);
            }
            break;
        }
        default: {
            const auto v = static_cast<std::uint64_t>(value);
            switch (f.size) {
                case 1: { auto x = static_cast<std::uint8_t>(v); std::memcpy(buf, &x, 1); break; }
                case 2: { auto x = static_cast<std::uint16_t>(v); std::memcpy(buf, &x, 2); break; }
                case 4: { auto x = static_cast<std::uint32_t>(v); std::memcpy(buf, &x, 4); break; }
                default: std::memcpy(buf, &v, 8);
            }
        }
    }
    out.append(buf, static_cast<std::size_t>(f.size));
}

double decode_ascii(const std::string& tok, const FieldDesc& f, std::size_t line) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = 0.0;
    if (f.type == 'F' && f.size == 4 && is_packed_color(f)) {
        const float x = std::strtof(s, &end);
        v = static_cast<double>(std::bit_cast<std::uint32_t>(x));
    } else if (f.type == 'F' && f.size == 4) {
        v = std::strtof(s, &end);
    } else {
        v = std::strtod(s, &end);
    }
    if (end == s || *end != '\0')
        parse_error("line " + std::to_string(line) + ": cannot parse value '" + tok + "' for field '" +
                    f.name + "'");
    return v;
}

std::string encode_ascii(double value, const FieldDesc& f) {
    char buf[64];
    if (f.type == 'F') {
        if (f.size == 4 && is_packed_color(f)) {
            const float x = std::bit_cast<float>(static_cast<std::uint32_t>(value));
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(x));
        } else if (f.size == 4) {
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(value)));
        } else {
            std::snprintf(buf, sizeof buf, "%.17g", value);
        }
    } else if (f.type == 'I') {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(value));
    } else {
        std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(value));
    }
    return buf;
}

int find_field(const Table& t, std::initializer_list<const char*> names) {
    for (std::size_t i = 0; i < t.fields.size(); ++i)
        for (const char* n : names)
            if (t.fields[i].name == n) return static_cast<int>(i);
    return -1;
}

/// Turns the parsed columns into a cloud, dropping non-finite points.
PointCloud assemble(const Table& t, const ReadOptions& options, ReadReport* report) {
    ReadReport local;
    ReadReport& rep = report ? *report : local;
    const int ix = find_field(t, {"x"});
    const int iy = find_field(t, {"y"});
    const int iz = find_field(t, {"z"});
    if (ix < 0 || iy < 0 || iz < 0) parse_error("cloud has no x, y and z fields");
    const int inx = find_field(t, {"normal_x", "nx"});
    const int iny = find_field(t, {"normal_y", "ny"});
    const int inz = find_field(t, {"normal_z", "nz"});
    const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
    const int irgb = find_field(t, {"rgb", "rgba"});
    const int ir = find_field(t, {"red"});
    const int ig = find_field(t, {"green"});
    const int ib = find_field(t, {"blue"});
    const bool split_colors = irgb < 0 && ir >= 0 && ig >= 0 && ib >= 0;
    const int iint = find_field(t, {"intensity"});

    std::vector<int> used = {ix, iy, iz};
    if (normals) used.insert(used.end(), {inx, iny, inz});
    if (irgb >= 0) used.push_back(irgb);
    if (split_colors) used.insert(used.end(), {ir, ig, ib});
    if (iint >= 0) used.push_back(iint);

    std::vector<int> extras;
    for (int f = 0; f < static_cast<int>(t.fields.size()); ++f) {
        if (std::find(used.begin(), used.end(), f) != used.end()) continue;
        if (options.strict) {
            extras.push_back(f);
        } else {
            rep.warnings.push_back("dropped unrecognized field '" + t.fields[f].name + "'");
        }
    }
    for (int f : used)
        if (t.fields[f].count != 1) parse_error("field '" + t.fields[f].name + "' must have COUNT 1");

    PointCloud cloud;
    for (int f : extras) {
        const auto& d = t.fields[f];
        cloud.extra_fields.push_back({d.name, d.type, d.size, d.count, {}});
    }
    for (std::size_t i = 0; i < t.points; ++i) {
        const Vec3 p(t.columns[ix][i], t.columns[iy][i], t.columns[iz][i]);
        if (!p.allFinite()) {
            ++rep.nan_points_dropped;
            continue;
        }
        cloud.points.push_back(p);
        if (normals) {
            const Vec3 n(t.columns[inx][i], t.columns[iny][i], t.columns[inz][i]);
            const bool ok = n.allFinite();
            cloud.normals.push_back(ok ? n : Vec3::Zero());
            cloud.normal_valid.push_back(ok ? 1 : 0);
        }
        if (irgb >= 0) {
            const auto v = static_cast<std::uint32_t>(t.columns[irgb][i]);
            cloud.colors.push_back({static_cast<std::uint8_t>((v >> 16) & 0xff),
                                    static_cast<std::uint8_t>((v >> 8) & 0xff),
                                    static_cast<std::uint8_t>(v & 0xff)});
        } else if (split_colors) {
            auto c = [&](int f) {
                return static_cast<std::uint8_t>(std::clamp(t.columns[f][i], 0.0, 255.0));
            };
            cloud.colors.push_back({c(ir), c(ig), c(ib)});
        }
        if (iint >= 0) cloud.intensities.push_back(t.columns[iint][i]);
        for (std::size_t e = 0; e < extras.size(); ++e) {
            const int f = extras[e];
            const int cnt = t.fields[f].count;
            for (int k = 0; k < cnt; ++k)
                cloud.extra_fields[e].values.push_back(t.columns[f][i * cnt + k]);
        }
    }
    if (rep.nan_points_dropped > 0)
        rep.warnings.push_back("dropped " + std::to_string(rep.nan_points_dropped) +
                               " points with non-finite coordinates");
    return cloud;
}

/// Field layout written for a cloud, with a getter for each value.
struct OutField {
    FieldDesc desc;
    std::function<double(std::size_t, int)> get;
};

std::vector<OutField> output_fields(const PointCloud& c, bool ply) {
    c.validate();
    std::vector<OutField> f;
    for (int a = 0; a < 3; ++a) {
        const char* n = a == 0 ? "x" : a == 1 ? "y" : "z";
        f.push_back({{n, 'F', 8, 1}, [&c, a](std::size_t i, int) { return c.points[i][a]; }});
    }
    if (c.has_colors()) {
        if (ply) {
            f.push_back({{"red", 'U', 1, 1}, [&c](std::size_t i, int) { return double(c.colors[i].r); }});
            f.push_back({{"green", 'U', 1, 1}, [&c](std::size_t i, int) { return double(c.colors[i].g); }});
            f.push_back({{"blue", 'U', 1, 1}, [&c](std::size_t i, int) { return double(c.colors[i].b); }});
        } else {
            f.push_back({{"rgb", 'F', 4, 1}, [&c](std::size_t i, int) {
                             const auto& k = c.colors[i];
                             return static_cast<double>((std::uint32_t(k.r) << 16) | (std::uint32_t(k.g) << 8) |
                                                        std::uint32_t(k.b));
                         }});
        }
    }
    if (c.has_normals()) {
        for (int a = 0; a < 3; ++a) {
            const char* n = ply ? (a == 0 ? "nx" : a == 1 ? "ny" : "nz")
                                : (a == 0 ? "normal_x" : a == 1 ? "normal_y" : "normal_z");
            f.push_back({{n, 'F', 8, 1}, [&c, a](std::size_t i, int) {
                             return c.normal_ok(i) ? c.normals[i][a]
                                                   : std::numeric_limits<double>::quiet_NaN();
                         }});
        }
    }
    if (c.has_intensities())
        f.push_back({{"intensity", 'F', 8, 1}, [&c](std::size_t i, int) { return c.intensities[i]; }});
    for (const auto& e : c.extra_fields) {
        f.push_back({{e.name, e.type, e.size, e.count},
                     [&e](std::size_t i, int k) { return e.values[i * static_cast<std::size_t>(e.count) + k]; }});
    }
    return f;
}

const char* ply_type_name(char type, int size) {
    if (type == 'F') return size == 4 ? "float" : "double";
    if (type == 'I') return size == 1 ? "char" : size == 2 ? "short" : "int";
    return size == 1 ? "uchar" : size == 2 ? "ushort" : "uint";
}

bool ply_type(const std::string& name, char& type, int& size) {
    struct Entry { const char* name; char type; int size; };
    static const Entry table[] = {
        {"char", 'I', 1},   {"int8", 'I', 1},    {"uchar", 'U', 1},  {"uint8", 'U', 1},
        {"short", 'I', 2},  {"int16", 'I', 2},   {"ushort", 'U', 2}, {"uint16", 'U', 2},
        {"int", 'I', 4},    {"int32", 'I', 4},   {"uint", 'U', 4},   {"uint32", 'U', 4},
        {"float", 'F', 4},  {"float32", 'F', 4}, {"double", 'F', 8}, {"float64", 'F', 8},
    };
    for (const auto& e : table)
        if (name == e.name) {
            type = e.type;
            size = e.size;
            return true;
        }
    return false;
}

std::string lower_extension(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext;
}

}  // namespace

PointCloud read_pcd(std::istream& in, const ReadOptions& options, ReadReport* report) {
    Table t;
    std::vector<int> sizes, counts;
    std::vector<char> types;
    long long width = -1, height = 1, points = -1;
    std::string data;
    std::string line;
    std::size_t lineno = 0;
    bool have_fields = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tok = split(line);
        if (tok.empty() || tok[0][0] == '#') continue;
        const std::string& key = tok[0];
        const auto where = "line " + std::to_string(lineno) + ": ";
        auto integer = [&](const std::string& s) {
            char* end = nullptr;
            const long long v = std::strtoll(s.c_str(), &end, 10);
            if (end == s.c_str() || *end != '\0' || v < 0)
                parse_error(where + "expected a non-negative integer after " + key + ", got '" + s + "'");
            return v;
        };
        if (key == "VERSION") {
            continue;
        } else if (key == "FIELDS" || key == "COLUMNS") {
            if (tok.size() < 2) parse_error(where + "FIELDS lists no fields");
            t.fields.clear();
            for (std::size_t i = 1; i < tok.size(); ++i) t.fields.push_back({tok[i], 'F', 4, 1});
            have_fields = true;
        } else if (key == "SIZE") {
            sizes.clear();
            for (std::size_t i = 1; i < tok.size(); ++i) sizes.push_back(static_cast<int>(integer(tok[i])));
        } else if (key == "TYPE") {
            types.clear();
            for (std::size_t i = 1; i < tok.size(); ++i) {
                if (tok[i].size() != 1) parse_error(where + "bad TYPE entry '" + tok[i] + "'");
                types.push_back(tok[i][0]);
            }
        } else if (key == "COUNT") {
            counts.clear();
            for (std::size_t i = 1; i < tok.size(); ++i) counts.push_back(static_cast<int>(integer(tok[i])));
        } else if (key == "WIDTH") {
            if (tok.size() != 2) parse_error(where + "WIDTH takes one value");
            width = integer(tok[1]);
        } else if (key == "HEIGHT") {
            if (tok.size() != 2) parse_error(where + "HEIGHT takes one value");
            height = integer(tok[1]);
        } else if (key == "VIEWPOINT") {
            if (tok.size() != 8) parse_error(where + "VIEWPOINT takes seven values");
        } else if (key == "POINTS") {
            if (tok.size() != 2) parse_error(where + "POINTS takes one value");
            points = integer(tok[1]);
        } else if (key == "DATA") {
            if (tok.size() != 2) parse_error(where + "DATA takes one value");
            data = tok[1];
            if (data != "ascii" && data != "binary")
                parse_error(where + "unsupported DATA encoding '" + data + "' (ascii or binary)");
            break;
        } else {
            parse_error(where + "unknown header key '" + key + "'");
        }
        const auto n = t.fields.size();
        if ((key == "SIZE" && have_fields && sizes.size() != n) ||
            (key == "TYPE" && have_fields && types.size() != n) ||
            (key == "COUNT" && have_fields && counts.size() != n))
            parse_error(where + key + " lists " +
                        std::to_string(key == "SIZE" ? sizes.size() : key == "TYPE" ? types.size() : counts.size()) +
                        " entries for " + std::to_string(n) + " fields");
    }
    if (!have_fields) parse_error("line " + std::to_string(lineno) + ": header has no FIELDS line");
    const auto n = t.fields.size();
    auto check = [&](std::size_t got, const char* what) {
        if (got != 0 && got != n)
            parse_error("line " + std::to_string(lineno) + ": " + what + " entry count does not match FIELDS");
    };
    check(sizes.size(), "SIZE");
    check(types.size(), "TYPE");
    check(counts.size(), "COUNT");
    for (std::size_t i = 0; i < n; ++i) {
        if (!sizes.empty()) t.fields[i].size = sizes[i];
        if (!types.empty()) t.fields[i].type = types[i];
        if (!counts.empty()) t.fields[i].count = counts[i];
        if (!valid_type(t.fields[i].type, t.fields[i].size))
            parse_error("line " + std::to_string(lineno) + ": field '" + t.fields[i].name +
                        "' has unsupported TYPE/SIZE " + t.fields[i].type + std::to_string(t.fields[i].size));
        if (t.fields[i].count < 1)
            parse_error("line " + std::to_string(lineno) + ": field '" + t.fields[i].name + "' has COUNT 0");
    }
    if (points < 0) points = width >= 0 ? width * height : 0;
    if (width >= 0 && width * height != points)
        parse_error("line " + std::to_string(lineno) + ": WIDTH * HEIGHT (" + std::to_string(width * height) +
                    ") does not match POINTS (" + std::to_string(points) + ")");
    if (data.empty() && points > 0) parse_error("line " + std::to_string(lineno) + ": header has no DATA line");

    t.points = static_cast<std::size_t>(points);
    t.columns.resize(n);
    for (std::size_t f = 0; f < n; ++f) t.columns[f].reserve(t.points * t.fields[f].count);

    if (data == "binary") {
        std::size_t record = 0;
        for (const auto& f : t.fields) record += static_cast<std::size_t>(f.size * f.count);
        const std::size_t expected = record * t.points;
        std::string payload(expected, '\0');
        in.read(payload.data(), static_cast<std::streamsize>(expected));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got < expected)
            parse_error("truncated binary payload: expected " + std::to_string(expected) + " bytes, got " +
                        std::to_string(got));
        const char* p = payload.data();
        for (std::size_t i = 0; i < t.points; ++i)
            for (std::size_t f = 0; f < n; ++f)
                for (int k = 0; k < t.fields[f].count; ++k) {
                    t.columns[f].push_back(decode_binary(p, t.fields[f]));
                    p += t.fields[f].size;
                }
    } else if (data == "ascii") {
        std::size_t per_line = 0;
        for (const auto& f : t.fields) per_line += static_cast<std::size_t>(f.count);
        std::size_t read_points = 0;
        while (read_points < t.points && std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto tok = split(line);
            if (tok.empty()) continue;
            if (tok.size() != per_line)
                parse_error("line " + std::to_string(lineno) + ": expected " + std::to_string(per_line) +
                            " values, found " + std::to_string(tok.size()));
            std::size_t c = 0;
            for (std::size_t f = 0; f < n; ++f)
                for (int k = 0; k < t.fields[f].count; ++k)
                    t.columns[f].push_back(decode_ascii(tok[c++], t.fields[f], lineno));
            ++read_points;
        }
        if (read_points < t.points)
            parse_error("ascii payload ends after " + std::to_string(read_points) + " of " +
                        std::to_string(t.points) + " points");
    }
    return assemble(t, options, report);
}

PointCloud read_ply(std::istream& in, const ReadOptions& options, ReadReport* report) {
    std::string line;
    std::size_t lineno = 0;
    auto next = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    if (!next() || line != "ply") parse_error("line 1: missing 'ply' magic");

    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<FieldDesc> props;
        bool has_list = false;
    };
    std::vector<Element> elements;
    bool format_seen = false;
    bool ended = false;
    while (next()) {
        const auto tok = split(line);
        const auto where = "line " + std::to_string(lineno) + ": ";
        if (tok.empty()) continue;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() != 3) parse_error(where + "malformed format line");
            if (tok[1] != "ascii") parse_error(where + "only ASCII PLY is supported, got '" + tok[1] + "'");
            format_seen = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) parse_error(where + "malformed element line");
            char* end = nullptr;
            const long long c = std::strtoll(tok[2].c_str(), &end, 10);
            if (*end != '\0' || c < 0) parse_error(where + "bad element count '" + tok[2] + "'");
            elements.push_back({tok[1], static_cast<std::size_t>(c), {}, false});
        } else if (tok[0] == "property") {
            if (elements.empty()) parse_error(where + "property before any element");
            if (tok.size() >= 2 && tok[1] == "list") {
                if (tok.size() != 5) parse_error(where + "malformed list property");
                elements.back().has_list = true;
                elements.back().props.push_back({tok[4], 'F', 8, 1});
                continue;
            }
            if (tok.size() != 3) parse_error(where + "malformed property line");
            FieldDesc f{tok[2], 'F', 4, 1};
            if (!ply_type(tok[1], f.type, f.size)) parse_error(where + "unknown property type '" + tok[1] + "'");
            elements.back().props.push_back(f);
        } else if (tok[0] == "end_header") {
            ended = true;
            break;
        } else {
            parse_error(where + "unknown header keyword '" + tok[0] + "'");
        }
    }
    if (!ended) parse_error("line " + std::to_string(lineno) + ": header has no end_header");
    if (!format_seen) parse_error("line " + std::to_string(lineno) + ": header has no format line");

    Table t;
    bool vertex_done = false;
    for (const auto& el : elements) {
        if (el.name != "vertex") {
            // One line per element instance in ASCII PLY.
            for (std::size_t i = 0; i < el.count; ++i)
                if (!next()) parse_error("payload ends inside element '" + el.name + "'");
            continue;
        }
        if (vertex_done) parse_error("more than one vertex element");
        if (el.has_list) parse_error("list properties on vertices are not supported");
        t.fields = el.props;
        t.points = el.count;
        t.columns.assign(t.fields.size(), {});
        for (std::size_t i = 0; i < el.count; ++i) {
            if (!next()) parse_error("payload ends after " + std::to_string(i) + " of " + std::to_string(el.count) +
                                     " vertices");
            const auto tok = split(line);
            if (tok.size() != t.fields.size())
                parse_error("line " + std::to_string(lineno) + ": expected " + std::to_string(t.fields.size()) +
                            " values, found " + std::to_string(tok.size()));
            for (std::size_t f = 0; f < t.fields.size(); ++f)
                t.columns[f].push_back(decode_ascii(tok[f], t.fields[f], lineno));
        }
        vertex_done = true;
    }
    if (!vertex_done) {
        t.fields = {{"x", 'F', 4, 1}, {"y", 'F', 4, 1}, {"z", 'F', 4, 1}};
        t.columns.assign(3, {});
    }
    return assemble(t, options, report);
}

PointCloud read_cloud(const std::string& path, const ReadOptions& options, ReadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorClass::Io, "cannot open '" + path + "'");
    try {
        if (lower_extension(path) == "ply") return read_ply(in, options, report);
        return read_pcd(in, options, report);
    } catch (const Error& e) {
        throw Error(e.error_class(), "'" + path + "': " + e.what());
    }
}

void write_pcd(const PointCloud& cloud, std::ostream& out, bool binary) {
    const auto fields = output_fields(cloud, false);
    std::string header = "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS";
    for (const auto& f : fields) header += " " + f.desc.name;
    header += "\nSIZE";
    for (const auto& f : fields) header += " " + std::to_string(f.desc.size);
    header += "\nTYPE";
    for (const auto& f : fields) header += std::string(" ") + f.desc.type;
    header += "\nCOUNT";
    for (const auto& f : fields) header += " " + std::to_string(f.desc.count);
    header += "\nWIDTH " + std::to_string(cloud.size()) + "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " +
              std::to_string(cloud.size()) + "\nDATA " + (binary ? "binary" : "ascii") + "\n";
    out << header;
    std::string body;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        bool first = true;
        for (const auto& f : fields)
            for (int k = 0; k < f.desc.count; ++k) {
                if (binary) {
                    encode_binary(body, f.get(i, k), f.desc);
                } else {
                    if (!first) body += ' ';
                    body += encode_ascii(f.get(i, k), f.desc);
                    first = false;
                }
            }
        if (!binary) body += '\n';
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

void write_ply(const PointCloud& cloud, std::ostream& out) {
    const auto fields = output_fields(cloud, true);
    std::string s = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
    for (const auto& f : fields) {
        if (f.desc.count == 1) {
            s += std::string("property ") + ply_type_name(f.desc.type, f.desc.size) + " " + f.desc.name + "\n";
        } else {
            for (int k = 0; k < f.desc.count; ++k)
                s += std::string("property ") + ply_type_name(f.desc.type, f.desc.size) + " " + f.desc.name + "_" +
                     std::to_string(k) + "\n";
        }
    }
    s += "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        bool first = true;
        for (const auto& f : fields)
            for (int k = 0; k < f.desc.count; ++k) {
                if (!first) s += ' ';
                s += encode_ascii(f.get(i, k), f.desc);
                first = false;
            }
        s += '\n';
    }
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_cloud(const PointCloud& cloud, const std::string& path) {
    write_cloud(cloud, path, lower_extension(path) == "ply" ? CloudFormat::PlyAscii : CloudFormat::PcdBinary);
}

void write_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorClass::Io, "cannot write '" + path + "'");
    switch (format) {
        case CloudFormat::PcdAscii: write_pcd(cloud, out, false); break;
        case CloudFormat::PcdBinary: write_pcd(cloud, out, true); break;
        case CloudFormat::PlyAscii: write_ply(cloud, out); break;
    }
    if (!out) throw Error(ErrorClass::Io, "failed writing '" + path + "'");
}

}  // namespace regbench
