//! Convolution layer shapes, layer-suite files and the built-in layer dataset.
//!
//! Extents follow the usual naming: a layer reads `c_in` input maps of
//! `in_h × in_w` pixels, applies `c_out × c_in` kernels of `k_h × k_w` weights at
//! a fixed `stride`, and produces `c_out` output maps of `out_h × out_w` pixels.
//! All model arithmetic works on [`LayerShape::effective_input_extent`], the
//! input window spanned by the outputs, so tabulated input sizes that
//! imply padding (224 vs. 227 for the first AlexNet layer) do not matter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_P_IN: u32 = 1;
pub const DEFAULT_P_W: u32 = 1;
pub const DEFAULT_P_OUT: u32 = 1;
pub const DEFAULT_P_ACC: u32 = 4;

/// One convolution layer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub in_h: u32,
    pub in_w: u32,
    pub out_h: u32,
    pub out_w: u32,
    pub k_h: u32,
    pub k_w: u32,
    pub stride: u32,
    pub c_in: u32,
    pub c_out: u32,
    pub p_in: u32,
    pub p_w: u32,
    pub p_out: u32,
    pub p_acc: u32,
}

/// Byte widths of the four element kinds moved by a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precisions {
    pub p_in: u32,
    pub p_w: u32,
    pub p_out: u32,
    pub p_acc: u32,
}

impl Precisions {
    pub const DEFAULT: Precisions = Precisions {
        p_in: DEFAULT_P_IN,
        p_w: DEFAULT_P_W,
        p_out: DEFAULT_P_OUT,
        p_acc: DEFAULT_P_ACC,
    };

    /// Every element, accumulators included, one byte wide.
    pub const BYTE: Precisions = Precisions {
        p_in: 1,
        p_w: 1,
        p_out: 1,
        p_acc: 1,
    };
}

impl Default for Precisions {
    fn default() -> Self {
        Precisions::DEFAULT
    }
}

impl LayerShape {
    /// Square layer with default precisions and the input extent derived from
    /// the output window.
    pub fn square(name: &str, out: u32, kernel: u32, stride: u32, c_in: u32, c_out: u32) -> Self {
        Self::rect(name, out, out, kernel, kernel, stride, c_in, c_out)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn rect(name: &str, out_h: u32, out_w: u32, k_h: u32, k_w: u32, stride: u32, c_in: u32, c_out: u32) -> Self {
        let mut layer = LayerShape {
            name: name.to_string(),
            in_h: 0,
            in_w: 0,
            out_h,
            out_w,
            k_h,
            k_w,
            stride,
            c_in,
            c_out,
            p_in: DEFAULT_P_IN,
            p_w: DEFAULT_P_W,
            p_out: DEFAULT_P_OUT,
            p_acc: DEFAULT_P_ACC,
        };
        let (h, w) = layer.effective_input_extent();
        layer.in_h = h as u32;
        layer.in_w = w as u32;
        layer
    }

    pub fn with_input(mut self, in_h: u32, in_w: u32) -> Self {
        self.in_h = in_h;
        self.in_w = in_w;
        self
    }

    pub fn with_precisions(mut self, p: Precisions) -> Self {
        self.p_in = p.p_in;
        self.p_w = p.p_w;
        self.p_out = p.p_out;
        self.p_acc = p.p_acc;
        self
    }

    pub fn precisions(&self) -> Precisions {
        Precisions {
            p_in: self.p_in,
            p_w: self.p_w,
            p_out: self.p_out,
            p_acc: self.p_acc,
        }
    }

    /// Input window spanned by the outputs: `(out − 1)·stride + kernel` per dimension.
    pub fn effective_input_extent(&self) -> (u64, u64) {
        let s = u64::from(self.stride);
        (
            (u64::from(self.out_h).saturating_sub(1)) * s + u64::from(self.k_h),
            (u64::from(self.out_w).saturating_sub(1)) * s + u64::from(self.k_w),
        )
    }

    /// Input rows and columns actually read. Equals the effective extent unless
    /// the stride exceeds the kernel, in which case the gaps are skipped.
    pub fn touched_input_extent(&self) -> (u64, u64) {
        let touched = |out: u32, k: u32| {
            let (out, k, s) = (u64::from(out), u64::from(k), u64::from(self.stride));
            if s >= k {
                out * k
            } else {
                (out - 1) * s + k
            }
        };
        (touched(self.out_h, self.k_h), touched(self.out_w, self.k_w))
    }

    /// Distinct input pixels read by the layer.
    pub fn input_elements(&self) -> u64 {
        let (h, w) = self.touched_input_extent();
        u64::from(self.c_in) * h * w
    }

    pub fn weight_elements(&self) -> u64 {
        u64::from(self.c_out) * u64::from(self.c_in) * u64::from(self.k_h) * u64::from(self.k_w)
    }

    pub fn output_elements(&self) -> u64 {
        u64::from(self.c_out) * u64::from(self.out_h) * u64::from(self.out_w)
    }

    /// Multiply-accumulate count, i.e. the iteration count of the full nest.
    pub fn macs(&self) -> u64 {
        self.output_elements() * u64::from(self.c_in) * u64::from(self.k_h) * u64::from(self.k_w)
    }

    /// True when the layer is invariant under swapping its two spatial dimensions.
    pub fn is_transpose_symmetric(&self) -> bool {
        self.k_h == self.k_w && self.out_h == self.out_w
    }

    /// Same layer with the horizontal and vertical dimensions exchanged.
    pub fn transposed(&self) -> LayerShape {
        LayerShape {
            in_h: self.in_w,
            in_w: self.in_h,
            out_h: self.out_w,
            out_w: self.out_h,
            k_h: self.k_w,
            k_w: self.k_h,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &'static str, reason: String| Error::Validation {
            layer: self.name.clone(),
            field,
            reason,
        };
        if self.name.trim().is_empty() {
            return Err(fail("name", "must not be empty".into()));
        }
        let positive = [
            ("in_h", self.in_h),
            ("in_w", self.in_w),
            ("out_h", self.out_h),
            ("out_w", self.out_w),
            ("k_h", self.k_h),
            ("k_w", self.k_w),
            ("stride", self.stride),
            ("c_in", self.c_in),
            ("c_out", self.c_out),
            ("p_in", self.p_in),
            ("p_w", self.p_w),
            ("p_out", self.p_out),
            ("p_acc", self.p_acc),
        ];
        for (field, value) in positive {
            if value == 0 {
                return Err(fail(field, "must be at least 1".into()));
            }
        }
        if self.p_acc < self.p_out {
            return Err(fail(
                "p_acc",
                format!(
                    "accumulator precision {} is narrower than output precision {}",
                    self.p_acc, self.p_out
                ),
            ));
        }
        Ok(())
    }
}

/// An ordered, named collection of layers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSuite {
    pub name: String,
    pub layers: Vec<LayerShape>,
}

impl LayerSuite {
    pub fn new(name: impl Into<String>, layers: Vec<LayerShape>) -> Result<Self> {
        let suite = LayerSuite {
            name: name.into(),
            layers,
        };
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for layer in &self.layers {
            layer.validate()?;
            if !seen.insert(layer.name.as_str()) {
                return Err(Error::DuplicateLayer(layer.name.clone()));
            }
        }
        Ok(())
    }

    pub fn layer(&self, name: &str) -> Option<&LayerShape> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layer suites always serialize")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    name: String,
    layers: Vec<RawLayer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    name: String,
    in_h: Option<u32>,
    in_w: Option<u32>,
    out_h: u32,
    out_w: u32,
    k_h: u32,
    k_w: u32,
    stride: u32,
    c_in: u32,
    c_out: u32,
    p_in: Option<u32>,
    p_w: Option<u32>,
    p_out: Option<u32>,
    p_acc: Option<u32>,
}

impl RawLayer {
    fn into_shape(self) -> LayerShape {
        let mut layer = LayerShape {
            name: self.name,
            in_h: 0,
            in_w: 0,
            out_h: self.out_h,
            out_w: self.out_w,
            k_h: self.k_h,
            k_w: self.k_w,
            stride: self.stride,
            c_in: self.c_in,
            c_out: self.c_out,
            p_in: self.p_in.unwrap_or(DEFAULT_P_IN),
            p_w: self.p_w.unwrap_or(DEFAULT_P_W),
            p_out: self.p_out.unwrap_or(DEFAULT_P_OUT),
            p_acc: self.p_acc.unwrap_or(DEFAULT_P_ACC),
        };
        let (h, w) = layer.effective_input_extent();
        layer.in_h = self.in_h.unwrap_or(h.min(u64::from(u32::MAX)) as u32);
        layer.in_w = self.in_w.unwrap_or(w.min(u64::from(u32::MAX)) as u32);
        layer
    }
}

/// Parses a layer-suite document (JSON object with `name` and `layers`).
pub fn parse_layer_suite(text: &str) -> Result<LayerSuite> {
    let raw: RawSuite = serde_json::from_str(text)?;
    let layers = raw.layers.into_iter().map(RawLayer::into_shape).collect();
    LayerSuite::new(raw.name, layers)
}

pub const BUILTIN_SUITES: [&str; 5] = ["alexnet", "zfnet", "vgg", "inception-v3", "resnet"];

/// Returns one of the built-in layer suites.
pub fn builtin_suite(name: &str) -> Result<LayerSuite> {
    let layers = match name.to_ascii_lowercase().as_str() {
        "alexnet" => alexnet(),
        "zfnet" => zfnet(),
        "vgg" | "vgg16" => vgg(),
        "inception-v3" | "inception" => inception_v3(),
        "resnet" => resnet(),
        _ => return Err(Error::UnknownSuite(name.to_string())),
    };
    let canonical = match name.to_ascii_lowercase().as_str() {
        "vgg16" => "vgg".to_string(),
        "inception" => "inception-v3".to_string(),
        other => other.to_string(),
    };
    LayerSuite::new(canonical, layers)
}

/// All built-in suites, in canonical order.
pub fn builtin_suites() -> Vec<LayerSuite> {
    BUILTIN_SUITES
        .iter()
        .map(|name| builtin_suite(name).expect("built-in suites are valid"))
        .collect()
}

/// `(name, H, E, C, M, k_h, k_w, stride)`
type Row = (&'static str, u32, u32, u32, u32, u32, u32, u32);

fn build(rows: &[Row]) -> Vec<LayerShape> {
    rows.iter()
        .map(|&(name, h, e, c, m, kh, kw, s)| LayerShape::rect(name, e, e, kh, kw, s, c, m).with_input(h, h))
        .collect()
}

fn alexnet() -> Vec<LayerShape> {
    build(&[
        ("AlexNet-1", 224, 55, 3, 96, 11, 11, 4),
        ("AlexNet-2", 55, 27, 96, 256, 5, 5, 2),
        // Stride 2 as tabulated, although the reference network uses 1 here.
        ("AlexNet-3", 27, 13, 256, 384, 3, 3, 2),
        ("AlexNet-4", 13, 13, 384, 384, 3, 3, 1),
        ("AlexNet-5", 13, 13, 384, 256, 3, 3, 1),
    ])
}

fn zfnet() -> Vec<LayerShape> {
    build(&[
        ("ZFNet-1", 224, 112, 3, 96, 7, 7, 2),
        ("ZFNet-3", 13, 13, 256, 384, 3, 3, 1),
        ("ZFNet-4", 13, 13, 384, 384, 3, 3, 1),
        ("ZFNet-5", 13, 13, 384, 256, 3, 3, 1),
        ("ZFNet-6", 6, 6, 256, 256, 3, 3, 1),
    ])
}

fn vgg() -> Vec<LayerShape> {
    build(&[
        ("VGG-1", 224, 224, 3, 64, 3, 3, 1),
        ("VGG-2", 224, 224, 64, 64, 3, 3, 1),
        ("VGG-3", 112, 112, 64, 128, 3, 3, 1),
        ("VGG-4", 112, 112, 128, 128, 3, 3, 1),
        ("VGG-5", 56, 56, 128, 256, 3, 3, 1),
        ("VGG-6", 56, 56, 256, 256, 3, 3, 1),
        ("VGG-8", 28, 28, 512, 256, 3, 3, 1),
        ("VGG-9", 28, 28, 512, 512, 3, 3, 1),
        ("VGG-11", 14, 14, 512, 512, 3, 3, 1),
    ])
}

/// Inception modules expanded to one layer per convolution line; kernels are
/// written `k_h × k_w`.
fn inception_v3() -> Vec<LayerShape> {
    let mut rows: Vec<Row> = Vec::new();
    for (block, c0) in [(0u32, 192u32), (1, 256), (2, 288)] {
        let pool_m = if block == 0 { 32 } else { 64 };
        let b = block_rows(block);
        rows.extend([
            (b[0], 35, 35, c0, 64, 1, 1, 1),
            (b[1], 35, 35, c0, 48, 1, 1, 1),
            (b[2], 35, 35, 48, 64, 5, 5, 1),
            (b[3], 35, 35, c0, 64, 1, 1, 1),
            (b[4], 35, 35, 64, 96, 3, 3, 1),
            (b[5], 35, 35, 96, 96, 3, 3, 1),
            (b[6], 35, 35, c0, pool_m, 1, 1, 1),
        ]);
    }
    rows.extend([
        ("Inception-3.1", 35, 17, 288, 384, 3, 3, 2),
        ("Inception-3.2", 35, 35, 288, 64, 1, 1, 1),
        ("Inception-3.3", 35, 35, 64, 96, 3, 3, 1),
        ("Inception-3.4", 35, 17, 96, 96, 3, 3, 2),
        ("Inception-3.5", 17, 17, 288, 64, 1, 1, 1),
        // 798 input maps as tabulated (the module input is 768 wide).
        ("Inception-4.1", 17, 17, 798, 192, 1, 1, 1),
        ("Inception-4.2", 17, 17, 768, 128, 1, 1, 1),
        ("Inception-4.3", 17, 17, 128, 128, 1, 7, 1),
        ("Inception-4.4", 17, 17, 128, 192, 7, 1, 1),
        ("Inception-4.5", 17, 17, 768, 128, 1, 1, 1),
        ("Inception-4.6", 17, 17, 128, 128, 7, 1, 1),
        ("Inception-4.7", 17, 17, 128, 128, 1, 7, 1),
        ("Inception-4.8", 17, 17, 128, 128, 7, 1, 1),
        ("Inception-4.9", 17, 17, 128, 192, 1, 7, 1),
        ("Inception-4.10", 17, 17, 768, 192, 1, 1, 1),
    ]);
    build(&rows)
}

fn block_rows(block: u32) -> [&'static str; 7] {
    match block {
        0 => [
            "Inception-0.1",
            "Inception-0.2",
            "Inception-0.3",
            "Inception-0.4",
            "Inception-0.5",
            "Inception-0.6",
            "Inception-0.7",
        ],
        1 => [
            "Inception-1.1",
            "Inception-1.2",
            "Inception-1.3",
            "Inception-1.4",
            "Inception-1.5",
            "Inception-1.6",
            "Inception-1.7",
        ],
        _ => [
            "Inception-2.1",
            "Inception-2.2",
            "Inception-2.3",
            "Inception-2.4",
            "Inception-2.5",
            "Inception-2.6",
            "Inception-2.7",
        ],
    }
}

fn resnet() -> Vec<LayerShape> {
    build(&[
        ("ResNet-1", 224, 112, 3, 64, 7, 7, 2),
        ("ResNet-2.1", 56, 56, 64, 64, 1, 1, 1),
        ("ResNet-2.2", 56, 56, 64, 64, 3, 3, 1),
        ("ResNet-2.3", 56, 56, 64, 256, 1, 1, 1),
        ("ResNet-3.1", 28, 28, 256, 128, 1, 1, 1),
        ("ResNet-3.2", 28, 28, 128, 128, 3, 3, 1),
        ("ResNet-3.3", 28, 28, 128, 512, 1, 1, 1),
        ("ResNet-4.1", 14, 14, 512, 256, 1, 1, 1),
        ("ResNet-4.2", 14, 14, 256, 256, 3, 3, 1),
        ("ResNet-4.3", 14, 14, 256, 1024, 1, 1, 1),
        ("ResNet-5.1", 7, 7, 1024, 512, 1, 1, 1),
        ("ResNet-5.2", 7, 7, 512, 512, 3, 3, 1),
        ("ResNet-5.3", 7, 7, 512, 2048, 1, 1, 1),
    ])
}
