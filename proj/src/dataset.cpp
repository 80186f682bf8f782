#include "mssr/dataset.hpp"

#include <algorithm>
#include <iostream>

namespace mssr {

namespace {

// rot90(in)(r, c) = in(H-1-c, r); applying it four times is the identity.
ImagePlane rotate90(const ImagePlane& in) {
    ImagePlane out(in.height, in.width, in.color);
    for (int ch = 0; ch < in.channels(); ++ch) {
        for (int r = 0; r < out.height; ++r) {
            for (int c = 0; c < out.width; ++c) {
                out.at(ch, r, c) = in.at(ch, in.height - 1 - c, r);
            }
        }
    }
    return out;
}

ImagePlane hflip(const ImagePlane& in) {
    ImagePlane out(in.width, in.height, in.color);
    for (int ch = 0; ch < in.channels(); ++ch) {
        for (int r = 0; r < in.height; ++r) {
            for (int c = 0; c < in.width; ++c) {
                out.at(ch, r, c) = in.at(ch, r, in.width - 1 - c);
            }
        }
    }
    return out;
}

}  // namespace

std::array<ImagePlane, 8> augment(const ImagePlane& img) {
    std::array<ImagePlane, 8> out;
    out[0] = img;
    out[1] = rotate90(out[0]);
    out[2] = rotate90(out[1]);
    out[3] = rotate90(out[2]);
    for (int i = 0; i < 4; ++i) {
        out[4 + i] = hflip(out[i]);
    }
    return out;
}

TrainCorpus::TrainCorpus(std::vector<ImagePlane> hr_luma_sources, int scale, int patch_size,
                         bool augment_sources, bool eager)
    : scale_(scale), patch_(patch_size), eager_(eager) {
    if (scale < 1) {
        throw ArgumentError("TrainCorpus: scale must be >= 1");
    }
    if (patch_size < 1) {
        throw ArgumentError("TrainCorpus: patch size must be >= 1");
    }
    for (ImagePlane& src : hr_luma_sources) {
        if (src.color != ColorSpace::Y) {
            throw ArgumentError("TrainCorpus: sources must be luminance planes");
        }
        std::vector<ImagePlane> variants;
        if (augment_sources) {
            auto all = augment(src);
            variants.assign(std::make_move_iterator(all.begin()),
                            std::make_move_iterator(all.end()));
        } else {
            variants.push_back(std::move(src));
        }
        for (ImagePlane& v : variants) {
            ImagePlane cropped = modcrop(v, scale);
            if (cropped.width < patch_ || cropped.height < patch_) {
                throw ArgumentError("TrainCorpus: image smaller than one patch after modcrop");
            }
            Entry e;
            if (eager_) {
                DegradeResult d = degrade(cropped, scale);
                e.hr = std::move(d.hr);
                e.lr_interp = std::move(d.lr_interp);
                e.residual_target = std::move(d.residual_target);
            } else {
                e.hr = std::move(cropped);
            }
            entries_.push_back(std::move(e));
        }
    }
    if (entries_.empty()) {
        throw StateError("TrainCorpus: no usable images");
    }
}

std::vector<ImagePlane> TrainCorpus::load_directory(const std::filesystem::path& dir, int scale,
                                                    int patch_size) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("corpus directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<ImagePlane> planes;
    for (const auto& path : files) {
        ImagePlane rgb;
        try {
            rgb = load_image(path);
        } catch (const FormatError& e) {
            std::cerr << "warning: skipping non-image file " << path.filename().string() << " ("
                      << e.what() << ")\n";
            continue;
        }
        ImagePlane luma = rgb_to_y(rgb);
        const int usable_w = (luma.width / scale) * scale;
        const int usable_h = (luma.height / scale) * scale;
        if (usable_w < patch_size || usable_h < patch_size) {
            std::cerr << "warning: skipping " << path.filename().string()
                      << " (smaller than one " << patch_size << "x" << patch_size
                      << " patch after modcrop)\n";
            continue;
        }
        planes.push_back(std::move(luma));
    }
    return planes;
}

DegradeResult TrainCorpus::entry(std::size_t i) const {
    const Entry& e = entries_.at(i);
    if (!eager_) {
        return degrade(e.hr, scale_);
    }
    DegradeResult d;
    d.hr = e.hr;
    d.lr_interp = e.lr_interp;
    d.residual_target = e.residual_target;
    return d;
}

}  // namespace mssr
