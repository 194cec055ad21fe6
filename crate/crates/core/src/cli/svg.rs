//! Static SVG 1.1 heatmaps. A cell's gray level follows its value: 0 is
//! white, 1 is black. Masked cells are light gray with a dash.

use std::fmt::Write as _;

use crate::sri::PairMatrix;

const CELL: usize = 56;
const MARGIN: usize = 64;
const TITLE_H: usize = 32;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn heatmap_svg(title: &str, names: &[String], matrix: &PairMatrix) -> String {
    let n = names.len();
    let width = MARGIN + n * CELL + 16;
    let height = TITLE_H + MARGIN + n * CELL + 16;
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">"#
    )
    .unwrap();
    writeln!(
        s,
        r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="16">{}</text>"#,
        width / 2,
        escape(title)
    )
    .unwrap();

    let top = TITLE_H + MARGIN;
    for (k, name) in names.iter().enumerate() {
        let c = MARGIN + k * CELL + CELL / 2;
        writeln!(
            s,
            r#"<text x="{c}" y="{}" text-anchor="middle">{}</text>"#,
            top - 10,
            escape(name)
        )
        .unwrap();
        let r = top + k * CELL + CELL / 2 + 5;
        writeln!(
            s,
            r#"<text x="{}" y="{r}" text-anchor="end">{}</text>"#,
            MARGIN - 8,
            escape(name)
        )
        .unwrap();
    }

    for i in 0..n {
        for j in 0..n {
            let (x, y) = (MARGIN + j * CELL, top + i * CELL);
            let (fill, label, ink) = match matrix.get(i, j) {
                Some(v) => {
                    let level = (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8;
                    let ink = if v > 0.5 { "#ffffff" } else { "#000000" };
                    (
                        format!("#{level:02x}{level:02x}{level:02x}"),
                        format!("{v:.2}"),
                        ink,
                    )
                }
                None => ("#f0f0f0".to_string(), "-".to_string(), "#808080"),
            };
            writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#c0c0c0"/>"##
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{label}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 5
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
