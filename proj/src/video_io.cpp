#include "midframe/video_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace fs = std::filesystem;

namespace midframe {

namespace {

bool numeric_stem(const std::string& stem, long& index) {
    if (stem.empty()) return false;
    for (char c : stem)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    index = std::stol(stem);
    return true;
}

Frame from_mat(const cv::Mat& img) {
    Frame f(img.rows, img.cols, img.channels() == 1 ? 1 : 3);
    const float inv = 1.f / 255.f;
    for (int y = 0; y < img.rows; ++y) {
        for (int x = 0; x < img.cols; ++x) {
            if (f.channels == 1) {
                f.at(0, y, x) = img.at<uint8_t>(y, x) * inv;
            } else {
                const cv::Vec3b& px = img.at<cv::Vec3b>(y, x);  // BGR
                f.at(0, y, x) = px[2] * inv;
                f.at(1, y, x) = px[1] * inv;
                f.at(2, y, x) = px[0] * inv;
            }
        }
    }
    return f;
}

cv::Mat to_mat(const Frame& f) {
    cv::Mat img(f.height, f.width, f.channels == 1 ? CV_8UC1 : CV_8UC3);
    auto quant = [](float v) {
        int q = static_cast<int>(std::lround(v * 255.f));
        return static_cast<uint8_t>(std::clamp(q, 0, 255));
    };
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            if (f.channels == 1) {
                img.at<uint8_t>(y, x) = quant(f.at(0, y, x));
            } else {
                img.at<cv::Vec3b>(y, x) =
                    cv::Vec3b(quant(f.at(2, y, x)), quant(f.at(1, y, x)),
                              quant(f.at(0, y, x)));
            }
        }
    }
    return img;
}

}  // namespace

VideoSequence load_sequence(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw std::runtime_error("load_sequence: no such directory: " + dir);

    std::vector<std::pair<long, fs::path>> entries;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        long idx;
        if (numeric_stem(e.path().stem().string(), idx))
            entries.emplace_back(idx, e.path());
    }
    if (entries.empty())
        throw std::runtime_error("load_sequence: no frames found in " + dir);
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    VideoSequence video;
    for (const auto& [idx, path] : entries) {
        cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
        if (img.empty())
            throw std::runtime_error("load_sequence: unreadable file: " + path.string());
        if (img.channels() == 4)
            cv::cvtColor(img, img, cv::COLOR_BGRA2BGR);
        Frame f = from_mat(img);
        if (!video.frames.empty() && !f.same_shape(video.frames.front()))
            throw std::runtime_error(
                "load_sequence: frame dimensions differ from first frame: " +
                path.string());
        video.frames.push_back(std::move(f));
    }
    return video;
}

Frame load_image(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (img.empty()) throw std::runtime_error("load_image: unreadable file: " + path);
    if (img.channels() == 4) cv::cvtColor(img, img, cv::COLOR_BGRA2BGR);
    return from_mat(img);
}

void save_image(const Frame& frame, const std::string& path) {
    if (!cv::imwrite(path, to_mat(frame)))
        throw std::runtime_error("save_image: cannot write " + path);
}

size_t save_sequence(const VideoSequence& video, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw std::runtime_error("save_sequence: cannot create directory: " + dir);

    char name[32];
    for (size_t i = 0; i < video.frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        const std::string path = (fs::path(dir) / name).string();
        if (!cv::imwrite(path, to_mat(video.frames[i])))
            throw std::runtime_error("save_sequence: cannot write " + path);
    }
    return video.frames.size();
}

}  // namespace midframe
