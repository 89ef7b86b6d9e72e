//! Named 256-entry RGB lookup tables used to render spectrogram matrices.
//!
//! The default `cubehelix` table is monotone in lightness, so rendered
//! spectrograms stay readable in grayscale reproduction. The table is a
//! compiled-in constant: rendering the same matrix yields the same bytes
//! on every platform.

use serde::{Deserialize, Serialize};

/// A 256-entry RGB lookup table. Entry 0 maps the floor value, entry 255
/// the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorMap {
    name: &'static str,
    table: &'static [[u8; 3]; 256],
}

/// Colormap selector stored in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ColorMapName {
    #[default]
    Cubehelix,
    Gray,
}

impl ColorMapName {
    pub fn resolve(self) -> ColorMap {
        match self {
            ColorMapName::Cubehelix => ColorMap {
                name: "cubehelix",
                table: &CUBEHELIX,
            },
            ColorMapName::Gray => ColorMap {
                name: "gray",
                table: &GRAY,
            },
        }
    }
}

impl ColorMap {
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Exact table entry, no interpolation.
    pub fn entry(&self, i: u8) -> [f32; 3] {
        let e = self.table[i as usize];
        [
            e[0] as f32 / 255.0,
            e[1] as f32 / 255.0,
            e[2] as f32 / 255.0,
        ]
    }

    /// Map a normalized value in [0,1] to RGB, interpolating linearly
    /// between adjacent table entries. 0.0 hits entry 0 exactly, 1.0 hits
    /// entry 255 exactly.
    pub fn lookup(&self, t: f32) -> [f32; 3] {
        let t = t.clamp(0.0, 1.0);
        let x = t * 255.0;
        let i0 = (x.floor() as usize).min(254);
        let frac = x - i0 as f32;
        let a = self.entry(i0 as u8);
        let b = self.entry((i0 + 1) as u8);
        [
            a[0] + (b[0] - a[0]) * frac,
            a[1] + (b[1] - a[1]) * frac,
            a[2] + (b[2] - a[2]) * frac,
        ]
    }
}

/// Dave Green's cubehelix scheme (start 0.5, rotations -1.5, hue 1.2,
/// gamma 1.0), sampled at 256 points and quantized to 8 bits per channel.
pub const CUBEHELIX: [[u8; 3]; 256] = [
    [0, 0, 0], [2, 0, 2], [4, 1, 3], [5, 1, 5], [7, 2, 7], [9, 2, 9], [10, 3, 11], [12, 4, 13],
    [13, 4, 15], [15, 5, 17], [16, 5, 19], [17, 6, 21], [18, 7, 23], [19, 8, 25], [20, 8, 28], [21, 9, 30],
    [22, 10, 32], [23, 11, 34], [23, 12, 36], [24, 13, 39], [24, 14, 41], [25, 15, 43], [25, 16, 45], [26, 17, 47],
    [26, 18, 49], [26, 20, 51], [26, 21, 54], [26, 22, 56], [26, 23, 58], [26, 25, 59], [26, 26, 61], [26, 28, 63],
    [25, 29, 65], [25, 31, 67], [25, 32, 68], [25, 34, 70], [24, 35, 71], [24, 37, 73], [23, 39, 74], [23, 41, 75],
    [22, 42, 76], [22, 44, 77], [21, 46, 78], [21, 48, 79], [20, 49, 80], [19, 51, 81], [19, 53, 81], [18, 55, 82],
    [18, 57, 82], [17, 59, 83], [17, 61, 83], [16, 63, 83], [16, 65, 83], [15, 67, 83], [15, 68, 83], [14, 70, 83],
    [14, 72, 83], [14, 74, 83], [14, 76, 82], [13, 78, 82], [13, 80, 81], [13, 82, 81], [13, 84, 80], [13, 85, 79],
    [13, 87, 78], [13, 89, 77], [14, 91, 76], [14, 92, 75], [14, 94, 74], [15, 96, 73], [16, 97, 72], [16, 99, 71],
    [17, 100, 69], [18, 102, 68], [19, 103, 67], [20, 105, 65], [21, 106, 64], [22, 108, 63], [23, 109, 61], [25, 110, 60],
    [26, 111, 58], [28, 113, 57], [29, 114, 56], [31, 115, 54], [33, 116, 53], [35, 117, 51], [37, 118, 50], [39, 118, 49],
    [41, 119, 48], [44, 120, 46], [46, 121, 45], [49, 121, 44], [51, 122, 43], [54, 123, 42], [56, 123, 41], [59, 123, 40],
    [62, 124, 39], [65, 124, 38], [68, 125, 38], [71, 125, 37], [74, 125, 37], [77, 125, 36], [80, 125, 36], [84, 125, 36],
    [87, 125, 35], [90, 126, 35], [94, 125, 35], [97, 125, 35], [100, 125, 36], [104, 125, 36], [107, 125, 37], [111, 125, 37],
    [114, 125, 38], [118, 124, 39], [121, 124, 39], [125, 124, 40], [128, 124, 42], [132, 123, 43], [135, 123, 44], [139, 123, 46],
    [142, 122, 47], [145, 122, 49], [149, 122, 51], [152, 121, 52], [155, 121, 54], [159, 121, 56], [162, 120, 59], [165, 120, 61],
    [168, 120, 63], [171, 119, 66], [174, 119, 68], [177, 119, 71], [180, 119, 74], [182, 118, 77], [185, 118, 80], [188, 118, 83],
    [190, 118, 86], [193, 118, 89], [195, 118, 92], [197, 118, 95], [199, 117, 99], [201, 118, 102], [203, 118, 106], [205, 118, 109],
    [207, 118, 113], [209, 118, 116], [210, 118, 120], [212, 118, 123], [213, 119, 127], [215, 119, 131], [216, 120, 134], [217, 120, 138],
    [218, 120, 142], [219, 121, 145], [219, 122, 149], [220, 122, 153], [221, 123, 156], [221, 124, 160], [222, 125, 164], [222, 125, 167],
    [222, 126, 171], [222, 127, 174], [222, 128, 178], [222, 129, 181], [222, 131, 185], [222, 132, 188], [222, 133, 191], [221, 134, 194],
    [221, 136, 197], [221, 137, 201], [220, 138, 204], [219, 140, 206], [219, 141, 209], [218, 143, 212], [217, 144, 215], [216, 146, 217],
    [216, 148, 220], [215, 149, 222], [214, 151, 224], [213, 153, 227], [212, 155, 229], [211, 157, 231], [210, 158, 233], [209, 160, 235],
    [208, 162, 236], [207, 164, 238], [206, 166, 239], [205, 168, 241], [204, 170, 242], [203, 172, 243], [202, 174, 245], [201, 176, 246],
    [200, 178, 247], [199, 180, 247], [198, 182, 248], [197, 184, 249], [196, 186, 249], [195, 188, 250], [195, 190, 250], [194, 192, 251],
    [193, 194, 251], [193, 196, 251], [192, 198, 251], [192, 200, 251], [191, 202, 251], [191, 203, 251], [191, 205, 251], [191, 207, 251],
    [190, 209, 251], [190, 211, 250], [190, 213, 250], [191, 214, 249], [191, 216, 249], [191, 218, 249], [191, 219, 248], [192, 221, 248],
    [192, 222, 247], [193, 224, 247], [193, 225, 246], [194, 227, 245], [195, 228, 245], [196, 229, 244], [197, 231, 244], [198, 232, 243],
    [199, 233, 243], [200, 234, 242], [201, 236, 242], [203, 237, 241], [204, 238, 241], [205, 239, 241], [207, 240, 240], [209, 241, 240],
    [210, 242, 240], [212, 242, 240], [214, 243, 240], [215, 244, 240], [217, 245, 240], [219, 246, 240], [221, 246, 240], [223, 247, 240],
    [225, 248, 241], [227, 248, 241], [229, 249, 241], [231, 249, 242], [233, 250, 243], [235, 250, 243], [237, 251, 244], [239, 251, 245],
    [241, 252, 246], [243, 252, 247], [245, 253, 248], [247, 253, 249], [249, 254, 251], [251, 254, 252], [253, 255, 253], [255, 255, 255],
];

const GRAY: [[u8; 3]; 256] = {
    let mut t = [[0u8; 3]; 256];
    let mut i = 0;
    while i < 256 {
        t[i] = [i as u8, i as u8, i as u8];
        i += 1;
    }
    t
};
