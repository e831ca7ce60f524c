use std::f64::consts::FRAC_2_PI;
use std::fmt::Write as _;

use jcwigner::WignerGrid;

/// Target image side in pixels; each node becomes a square block.
const TARGET_SIDE: usize = 512;

/// Blue, white, red anchors at −1, −½, 0, ½, 1.
const ANCHORS: [[f64; 3]; 5] = [
    [5.0, 48.0, 97.0],
    [67.0, 147.0, 195.0],
    [247.0, 247.0, 247.0],
    [214.0, 96.0, 77.0],
    [103.0, 0.0, 31.0],
];

/// Diverging colormap on the fixed scale `[−2/π, 2/π]`; values outside are clamped.
pub fn colormap(w: f64) -> [u8; 3] {
    let x = if w.is_nan() { 0.0 } else { (w / FRAC_2_PI).clamp(-1.0, 1.0) };
    let pos = (x + 1.0) * 2.0;
    let i = (pos.floor() as usize).min(3);
    let f = pos - i as f64;
    let mut rgb = [0u8; 3];
    for c in 0..3 {
        let v = ANCHORS[i][c] + f * (ANCHORS[i + 1][c] - ANCHORS[i][c]);
        rgb[c] = v.round() as u8;
    }
    rgb
}

pub fn pixels_per_node(nodes: usize) -> usize {
    TARGET_SIDE.div_ceil(nodes).max(1)
}

/// 8-bit RGB PNG of the grid (top row is the largest Im α) and the text of
/// its axes sidecar.
pub fn render_heatmap(grid: &WignerGrid) -> (Vec<u8>, String) {
    let n = grid.nodes_per_axis();
    let scale = pixels_per_node(n);
    let side = n * scale;
    let mut data = Vec::with_capacity(side * side * 3);
    for py in 0..side {
        let iy = n - 1 - py / scale;
        for px in 0..side {
            data.extend_from_slice(&colormap(grid.get(px / scale, iy)));
        }
    }
    let mut png_bytes = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut png_bytes, side as u32, side as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(&data).expect("in-memory png data");
    }
    (png_bytes, axes_text(grid, scale))
}

fn axes_text(grid: &WignerGrid, scale: usize) -> String {
    let spec = &grid.spec;
    let n = grid.nodes_per_axis();
    let lo = spec.node(0, 0);
    let hi = spec.node(n - 1, n - 1);
    let mut s = String::new();
    let _ = writeln!(s, "re_alpha_min = {:.16e}", lo.re);
    let _ = writeln!(s, "re_alpha_max = {:.16e}", hi.re);
    let _ = writeln!(s, "im_alpha_min = {:.16e}", lo.im);
    let _ = writeln!(s, "im_alpha_max = {:.16e}", hi.im);
    let _ = writeln!(s, "step = {:.16e}", spec.step());
    let _ = writeln!(s, "nodes_per_axis = {n}");
    let _ = writeln!(s, "pixels_per_node = {scale}");
    let _ = writeln!(s, "value_min = {:.16e}", -FRAC_2_PI);
    let _ = writeln!(s, "value_max = {:.16e}", FRAC_2_PI);
    let _ = writeln!(s, "colormap = diverging blue-white-red, white at 0");
    let _ = writeln!(s, "x_axis = re_alpha increasing left to right");
    let _ = writeln!(s, "y_axis = im_alpha increasing bottom to top");
    s
}
