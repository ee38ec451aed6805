use std::fs::File;
use std::io::{BufRead, BufReader, Cursor, Read};
use std::path::Path;

use image::RgbImage;

use super::provider::{FrameProvider, VideoInfo};
use crate::error::{Error, Result};

/// Reads uncompressed YUV4MPEG2 clips (8-bit mono, 4:2:0, 4:2:2, 4:4:4).
#[derive(Debug, Clone, Copy, Default)]
pub struct Y4mProvider;

#[derive(Debug, Clone, Copy)]
enum Chroma {
    Mono,
    Sub420,
    Sub422,
    Full,
}

struct Layout {
    width: usize,
    height: usize,
    fps: f64,
    chroma: Chroma,
    full_range: bool,
    frame_bytes: usize,
}

fn media(path: &Path, reason: impl Into<String>) -> Error {
    Error::Media {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn layout(path: &Path, dec: &y4m::Decoder<impl Read>) -> Result<Layout> {
    use y4m::Colorspace as C;
    let chroma = match dec.get_colorspace() {
        C::Cmono => Chroma::Mono,
        C::C420 | C::C420jpeg | C::C420paldv | C::C420mpeg2 => Chroma::Sub420,
        C::C422 => Chroma::Sub422,
        C::C444 => Chroma::Full,
        other => return Err(media(path, format!("unsupported colorspace {other:?}"))),
    };
    let (w, h) = (dec.get_width(), dec.get_height());
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let chroma_bytes = match chroma {
        Chroma::Mono => 0,
        Chroma::Sub420 => 2 * cw * ch,
        Chroma::Sub422 => 2 * cw * h,
        Chroma::Full => 2 * w * h,
    };
    let rate = dec.get_framerate();
    let full_range = dec
        .get_raw_params()
        .split(|&b| b == b' ')
        .any(|p| p.eq_ignore_ascii_case(b"XCOLORRANGE=FULL"));
    Ok(Layout {
        width: w,
        height: h,
        fps: rate.num as f64 / rate.den.max(1) as f64,
        chroma,
        full_range,
        frame_bytes: w * h + chroma_bytes,
    })
}

/// Receives each frame slot: index, layout and planes or a parse failure.
type Visitor<'a> = dyn FnMut(u64, &Layout, std::result::Result<[&[u8]; 3], String>) -> Result<bool> + 'a;

/// Walks every frame slot. A slot with a malformed frame header is
/// reported as `Err` and the stream resynchronizes after its payload.
fn walk(
    path: &Path,
    visit: &mut Visitor<'_>,
) -> Result<Layout> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header).map_err(|e| io_err(path, e))?;
    let mut index = 0u64;
    loop {
        let mut dec = y4m::Decoder::new(Cursor::new(&header).chain(&mut reader))
            .map_err(|e| media(path, format!("invalid y4m header: {e}")))?;
        let lay = layout(path, &dec)?;
        let resync = loop {
            match dec.read_frame() {
                Ok(frame) => {
                    let planes = [frame.get_y_plane(), frame.get_u_plane(), frame.get_v_plane()];
                    if !visit(index, &lay, Ok(planes))? {
                        return Ok(lay);
                    }
                    index += 1;
                }
                Err(y4m::Error::EOF) => return Ok(lay),
                Err(y4m::Error::IoError(e)) => return Err(io_err(path, e)),
                Err(e) => {
                    if !visit(index, &lay, Err(format!("corrupt frame: {e}")))? {
                        return Ok(lay);
                    }
                    index += 1;
                    break lay.frame_bytes;
                }
            }
        };
        drop(dec);
        let skipped = std::io::copy(&mut (&mut reader).take(resync as u64), &mut std::io::sink())
            .map_err(|e| io_err(path, e))?;
        if skipped < resync as u64 {
            return Ok(lay);
        }
    }
}

fn to_rgb(lay: &Layout, planes: [&[u8]; 3]) -> RgbImage {
    let (w, h) = (lay.width, lay.height);
    let cw = w.div_ceil(2);
    let mut out = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let luma = planes[0][y * w + x] as f32;
            let ci = match lay.chroma {
                Chroma::Mono => None,
                Chroma::Sub420 => Some((y / 2) * cw + x / 2),
                Chroma::Sub422 => Some(y * cw + x / 2),
                Chroma::Full => Some(y * w + x),
            };
            let (u, v) = ci.map_or((128.0, 128.0), |i| (planes[1][i] as f32, planes[2][i] as f32));
            let (d, e) = (u - 128.0, v - 128.0);
            let (c, ks) = if lay.full_range {
                (luma, [1.402, 0.344136, 0.714136, 1.772])
            } else {
                (1.164383 * (luma - 16.0), [1.596027, 0.391762, 0.812968, 2.017232])
            };
            let px = [c + ks[0] * e, c - ks[1] * d - ks[2] * e, c + ks[3] * d];
            out.put_pixel(x as u32, y as u32, image::Rgb(px.map(|v| v.round().clamp(0.0, 255.0) as u8)));
        }
    }
    out
}

impl FrameProvider for Y4mProvider {
    fn probe(&self, path: &Path) -> Result<VideoInfo> {
        let mut count = 0u64;
        let lay = walk(path, &mut |_, _, _| {
            count += 1;
            Ok(true)
        })?;
        Ok(VideoInfo {
            total_frames: count,
            fps: lay.fps,
            width: lay.width as u32,
            height: lay.height as u32,
        })
    }

    fn decode(
        &self,
        path: &Path,
        indices: &[u64],
        sink: &mut dyn FnMut(u64, std::result::Result<RgbImage, String>) -> Result<()>,
    ) -> Result<()> {
        let mut wanted = indices.iter().copied().peekable();
        walk(path, &mut |index, lay, frame| {
            let Some(&next) = wanted.peek() else {
                return Ok(false);
            };
            if index == next {
                wanted.next();
                sink(index, frame.map(|planes| to_rgb(lay, planes)))?;
            }
            Ok(wanted.peek().is_some())
        })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::extract_frames;

    fn write_clip(path: &Path, frames: &[u8], corrupt: Option<usize>) {
        let (w, h) = (4usize, 2usize);
        let mut bytes = b"YUV4MPEG2 W4 H2 F25:1 Ip A1:1 C444 XCOLORRANGE=FULL\n".to_vec();
        for (i, &level) in frames.iter().enumerate() {
            bytes.extend_from_slice(if Some(i) == corrupt { b"FRAMX\n" } else { b"FRAME\n" });
            bytes.extend(std::iter::repeat_n(level, w * h));
            bytes.extend(std::iter::repeat_n(128u8, 2 * w * h));
        }
        std::fs::write(path, bytes).unwrap();
    }

    #[test]
    fn probe_counts_frames() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.y4m");
        write_clip(&p, &[10, 20, 30, 40, 50], None);
        let info = Y4mProvider.probe(&p).unwrap();
        assert_eq!(info.total_frames, 5);
        assert_eq!((info.width, info.height), (4, 2));
        assert_eq!(info.fps, 25.0);
    }

    #[test]
    fn decodes_requested_frames_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.y4m");
        let levels: Vec<u8> = (0..10).map(|i| i * 20).collect();
        write_clip(&p, &levels, None);
        let ex = extract_frames("a", &p, &[1, 4, 9], &Y4mProvider).unwrap();
        let got: Vec<(u64, u8)> = ex.samples.iter().map(|s| (s.frame_index, s.image.get_pixel(0, 0)[0])).collect();
        assert_eq!(got, vec![(1, 20), (4, 80), (9, 180)]);
    }

    #[test]
    fn corrupt_frame_header_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.y4m");
        let levels: Vec<u8> = (0..10).map(|i| i * 20).collect();
        write_clip(&p, &levels, Some(6));
        assert_eq!(Y4mProvider.probe(&p).unwrap().total_frames, 10);
        let idx: Vec<u64> = (0..10).collect();
        let ex = extract_frames("a", &p, &idx, &Y4mProvider).unwrap();
        assert_eq!(ex.samples.len(), 9);
        assert_eq!(ex.skipped.len(), 1);
        assert_eq!(ex.skipped[0].frame_index, 6);
        assert_eq!(ex.samples[6].frame_index, 7);
        assert_eq!(ex.samples[6].image.get_pixel(0, 0)[0], 140);
    }

    #[test]
    fn garbage_file_is_media_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.y4m");
        std::fs::write(&p, b"not a video\n").unwrap();
        assert!(matches!(Y4mProvider.probe(&p), Err(Error::Media { .. })));
    }
}
