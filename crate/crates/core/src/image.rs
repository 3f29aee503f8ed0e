//! Netpbm image I/O and simple overlay drawing.

use std::io;

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage16 {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![0; 3 * width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Binary PPM (P6, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> io::Result<Self> {
        let (fields, body) = netpbm_header(bytes, b"P6")?;
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(invalid(format!("unsupported PPM maxval {maxval}")));
        }
        let len = 3 * width as usize * height as usize;
        if body.len() < len {
            return Err(invalid("PPM pixel data truncated"));
        }
        Ok(Self { width, height, data: body[..len].to_vec() })
    }

    /// One-pixel rectangle outline over `[x, x + w) x [y, y + h)`.
    pub fn draw_rect(&mut self, x: i64, y: i64, w: i64, h: i64, c: [u8; 3]) {
        if w <= 0 || h <= 0 {
            return;
        }
        let (x1, y1) = (x + w - 1, y + h - 1);
        for i in x..=x1 {
            self.put(i, y, c);
            self.put(i, y1, c);
        }
        for j in y..=y1 {
            self.put(x, j, c);
            self.put(x1, j, c);
        }
    }

    /// Draws decimal digits with a 3x5 bitmap font scaled by `scale`.
    pub fn draw_number(&mut self, x: i64, y: i64, value: usize, scale: i64, c: [u8; 3]) {
        for (k, ch) in value.to_string().bytes().enumerate() {
            let glyph = DIGITS[(ch - b'0') as usize];
            let ox = x + k as i64 * 4 * scale;
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..3 {
                    if bits & (0b100 >> col) != 0 {
                        for dy in 0..scale {
                            for dx in 0..scale {
                                self.put(ox + col * scale + dx, y + row as i64 * scale + dy, c);
                            }
                        }
                    }
                }
            }
        }
    }
}

const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

impl GrayImage16 {
    /// Binary PGM (P5, maxval 65535, big-endian samples).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for v in &self.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> io::Result<Self> {
        let (fields, body) = netpbm_header(bytes, b"P5")?;
        let [width, height, maxval] = fields;
        if maxval != 65535 {
            return Err(invalid(format!("expected 16-bit PGM, maxval {maxval}")));
        }
        let n = width as usize * height as usize;
        if body.len() < 2 * n {
            return Err(invalid("PGM pixel data truncated"));
        }
        let data = body[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        Ok(Self { width, height, data })
    }
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Parses magic, width, height and maxval (comments allowed); returns the raster body.
fn netpbm_header<'a>(bytes: &'a [u8], magic: &[u8]) -> io::Result<([u32; 3], &'a [u8])> {
    if !bytes.starts_with(magic) {
        return Err(invalid(format!("missing {} magic", String::from_utf8_lossy(magic))));
    }
    let mut pos = magic.len();
    let mut fields = [0u32; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| invalid("malformed netpbm header"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(invalid("malformed netpbm header"));
    }
    Ok((fields, &bytes[pos + 1..]))
}
