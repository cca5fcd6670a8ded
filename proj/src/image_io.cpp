#include "deblur/image_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace deblur {

ImageGrid read_image(const std::filesystem::path& path)
{
    const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty())
        throw IoError("cannot read image " + path.string());
    double scale = 1.0;
    switch (m.depth()) {
    case CV_8U:
        scale = 1.0 / 255.0;
        break;
    case CV_16U:
        scale = 1.0 / 65535.0;
        break;
    case CV_32F:
    case CV_64F:
        break;
    default:
        throw IoError("unsupported sample type in " + path.string());
    }
    cv::Mat f;
    m.convertTo(f, CV_64F, scale);
    const int src_ch = f.channels();
    if (src_ch != 1 && src_ch != 3 && src_ch != 4)
        throw IoError("unsupported channel count in " + path.string());
    const int ch = src_ch == 1 ? 1 : 3;
    ImageGrid out(ch, f.rows, f.cols);
    for (int i = 0; i < f.rows; ++i) {
        const double* row = f.ptr<double>(i);
        for (int j = 0; j < f.cols; ++j) {
            if (ch == 1) {
                out(0, i, j) = std::clamp(row[j], 0.0, 1.0);
            } else {
                // OpenCV stores BGR(A)
                for (int c = 0; c < 3; ++c)
                    out(c, i, j) = std::clamp(row[j * src_ch + (2 - c)], 0.0, 1.0);
            }
        }
    }
    return out;
}

void write_image(const std::filesystem::path& path, const ImageGrid& x, int bits)
{
    require_image_channels(x.channels());
    if (bits != 8 && bits != 16)
        throw ParameterError("PNG depth must be 8 or 16 bits");
    const int depth = bits == 8 ? CV_8U : CV_16U;
    const double scale = bits == 8 ? 255.0 : 65535.0;
    cv::Mat m(x.height(), x.width(), CV_MAKETYPE(depth, x.channels()));
    for (int i = 0; i < x.height(); ++i)
        for (int j = 0; j < x.width(); ++j)
            for (int c = 0; c < x.channels(); ++c) {
                const int dst_c = x.channels() == 1 ? 0 : 2 - c;
                const double v = std::round(std::clamp(x(c, i, j), 0.0, 1.0) * scale);
                if (bits == 8)
                    m.ptr<std::uint8_t>(i)[j * x.channels() + dst_c] = static_cast<std::uint8_t>(v);
                else
                    m.ptr<std::uint16_t>(i)[j * x.channels() + dst_c] = static_cast<std::uint16_t>(v);
            }
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write image " + path.string() + ": " + e.what());
    }
    if (!ok)
        throw IoError("cannot write image " + path.string());
}

Kernel read_kernel_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot read kernel " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("malformed kernel value '" + cell + "' in " + path.string());
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("ragged kernel rows in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty())
        throw IoError("empty kernel file " + path.string());
    Kernel k(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j)
            k(i, j) = rows[i][j];
    return k;
}

void write_kernel_csv(const std::filesystem::path& path, const Kernel& k)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot write kernel " + path.string());
    os << std::setprecision(17);
    for (int i = 0; i < k.rows(); ++i) {
        for (int j = 0; j < k.cols(); ++j)
            os << (j ? "," : "") << k(i, j);
        os << '\n';
    }
    if (!os)
        throw IoError("failed while writing kernel " + path.string());
}

void write_kernel_png(const std::filesystem::path& path, const Kernel& k)
{
    double peak = 0;
    for (double v : k.storage())
        peak = std::max(peak, v);
    ImageGrid img(1, k.rows(), k.cols());
    for (int i = 0; i < k.rows(); ++i)
        for (int j = 0; j < k.cols(); ++j)
            img(0, i, j) = peak > 0 ? std::max(0.0, k(i, j)) / peak : 0.0;
    write_image(path, img, 8);
}

Kernel read_kernel(const std::filesystem::path& path)
{
    if (path.extension() == ".csv")
        return read_kernel_csv(path);
    const ImageGrid img = read_image(path);
    Kernel k(img.height(), img.width());
    double s = 0;
    for (int i = 0; i < img.height(); ++i)
        for (int j = 0; j < img.width(); ++j) {
            double v = 0;
            for (int c = 0; c < img.channels(); ++c)
                v += img(c, i, j);
            k(i, j) = v;
            s += v;
        }
    if (!(s > 0))
        throw IoError("kernel image " + path.string() + " has no mass");
    for (double& v : k.storage())
        v /= s;
    return k;
}

} // namespace deblur
