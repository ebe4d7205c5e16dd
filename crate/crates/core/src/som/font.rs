//! 5×7 digit glyphs.

pub const GLYPH_W: u32 = 5;
pub const GLYPH_H: u32 = 7;

const DIGITS: [[u8; 7]; 10] = [
    [
        0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110,
    ],
    [
        0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110,
    ],
    [
        0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111,
    ],
    [
        0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110,
    ],
    [
        0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010,
    ],
    [
        0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110,
    ],
    [
        0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110,
    ],
    [
        0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000,
    ],
    [
        0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110,
    ],
    [
        0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100,
    ],
];

/// Rendered text as a bitmap: `(width, height, row-major bits)` with one blank column between
/// glyphs, each glyph pixel scaled to a `scale × scale` block.
pub fn render_number(n: u32, scale: u32) -> (u32, u32, Vec<bool>) {
    let digits: Vec<usize> = n.to_string().bytes().map(|b| (b - b'0') as usize).collect();
    let cols = digits.len() as u32 * (GLYPH_W + 1) - 1;
    let (w, h) = (cols * scale, GLYPH_H * scale);
    let mut bits = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = (x / scale, y / scale);
            let (g, gx) = ((cx / (GLYPH_W + 1)) as usize, cx % (GLYPH_W + 1));
            if gx < GLYPH_W && DIGITS[digits[g]][cy as usize] >> (GLYPH_W - 1 - gx) & 1 == 1 {
                bits[(y * w + x) as usize] = true;
            }
        }
    }
    (w, h, bits)
}
