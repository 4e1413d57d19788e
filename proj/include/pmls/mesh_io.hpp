#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pmls/mesh.hpp"

namespace pmls {

/// Line-oriented polyhedral mesh text format:
///
///   polymesh 1
///   vertices N        followed by N lines "x y z"
///   faces M           followed by M lines "k v1 ... vk"   (0-based, ordered,
///                     counterclockwise seen from outside the owner cell)
///   cells P           followed by P lines "m f1 ... fm"
///
/// '#' starts a comment; blank lines are skipped. Face ownership is inferred
/// from the cell section: the first cell listing a face owns it, the second
/// is its neighbor, a third listing is an error.
class PolymeshParseError : public std::runtime_error {
public:
    PolymeshParseError(int line, const std::string& what)
        : std::runtime_error("polymesh: line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

namespace detail {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    /// Next non-empty line with comments stripped; false at end of stream.
    bool next(std::string& out) {
        std::string raw;
        while (std::getline(in_, raw)) {
            ++line_;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            std::size_t a = raw.find_first_not_of(" \t\r");
            if (a == std::string::npos) continue;
            std::size_t b = raw.find_last_not_of(" \t\r");
            out = raw.substr(a, b - a + 1);
            return true;
        }
        return false;
    }

    int line() const { return line_; }

private:
    std::istream& in_;
    int line_ = 0;
};

}  // namespace detail

inline Mesh read_polymesh(std::istream& in) {
    detail::LineReader rd(in);
    std::string line;
    auto require_line = [&](const char* what) {
        if (!rd.next(line)) throw PolymeshParseError(rd.line() + 1, std::string("expected ") + what);
    };

    require_line("header 'polymesh 1'");
    {
        std::istringstream ss(line);
        std::string tag;
        int version = 0;
        if (!(ss >> tag >> version) || tag != "polymesh" || version != 1)
            throw PolymeshParseError(rd.line(), "expected header 'polymesh 1'");
    }

    auto read_count = [&](const char* keyword) {
        require_line(keyword);
        std::istringstream ss(line);
        std::string tag;
        long count = -1;
        if (!(ss >> tag >> count) || tag != keyword || count < 0)
            throw PolymeshParseError(rd.line(), std::string("expected '") + keyword + " N'");
        return count;
    };

    Mesh mesh;
    const long nv = read_count("vertices");
    mesh.vertices.resize(nv);
    for (long i = 0; i < nv; ++i) {
        require_line("vertex line");
        std::istringstream ss(line);
        Vec3& v = mesh.vertices[i];
        if (!(ss >> v.x >> v.y >> v.z))
            throw PolymeshParseError(rd.line(), "bad vertex line");
    }

    const long nf = read_count("faces");
    mesh.faces.resize(nf);
    for (long i = 0; i < nf; ++i) {
        require_line("face line");
        std::istringstream ss(line);
        long k = 0;
        if (!(ss >> k) || k < 3)
            throw PolymeshParseError(rd.line(), "face " + std::to_string(i) + ": bad vertex count");
        Face& f = mesh.faces[i];
        f.vertices.resize(k);
        for (long j = 0; j < k; ++j) {
            if (!(ss >> f.vertices[j]))
                throw PolymeshParseError(rd.line(), "face " + std::to_string(i) + ": bad vertex list");
            if (f.vertices[j] < 0 || f.vertices[j] >= nv)
                throw PolymeshParseError(rd.line(), "face " + std::to_string(i) +
                                                        " references undefined vertex " +
                                                        std::to_string(f.vertices[j]));
        }
    }

    const long nc = read_count("cells");
    mesh.cells.resize(nc);
    for (long i = 0; i < nc; ++i) {
        require_line("cell line");
        std::istringstream ss(line);
        long m = 0;
        if (!(ss >> m) || m < 4)
            throw PolymeshParseError(rd.line(), "cell " + std::to_string(i) + ": bad face count");
        Cell& c = mesh.cells[i];
        c.faces.resize(m);
        for (long j = 0; j < m; ++j) {
            long f = -1;
            if (!(ss >> f))
                throw PolymeshParseError(rd.line(), "cell " + std::to_string(i) + ": bad face list");
            if (f < 0 || f >= nf)
                throw PolymeshParseError(rd.line(), "cell " + std::to_string(i) +
                                                        " references undefined face " +
                                                        std::to_string(f));
            c.faces[j] = static_cast<int>(f);
            Face& face = mesh.faces[f];
            if (face.owner < 0)
                face.owner = static_cast<int>(i);
            else if (face.neighbor < 0)
                face.neighbor = static_cast<int>(i);
            else
                throw PolymeshParseError(rd.line(), "face " + std::to_string(f) +
                                                        " shared by more than two cells");
        }
    }

    for (long f = 0; f < nf; ++f)
        if (mesh.faces[f].owner < 0)
            throw std::runtime_error("polymesh: face " + std::to_string(f) +
                                     " is not referenced by any cell");

    finalize_mesh(mesh);
    return mesh;
}

inline void write_polymesh(std::ostream& out, const Mesh& mesh) {
    out << "polymesh 1\n";
    out << "vertices " << mesh.vertices.size() << "\n";
    char buf[96];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    out << "faces " << mesh.faces.size() << "\n";
    for (const Face& f : mesh.faces) {
        out << f.vertices.size();
        for (int v : f.vertices) out << ' ' << v;
        out << "\n";
    }
    out << "cells " << mesh.cells.size() << "\n";
    for (const Cell& c : mesh.cells) {
        out << c.faces.size();
        for (int f : c.faces) out << ' ' << f;
        out << "\n";
    }
}

}  // namespace pmls
