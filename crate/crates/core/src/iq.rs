//! Raw I/Q export: interleaved little-endian `f32` pairs plus a `.hdr` text sidecar.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stream::{SampleSource, SampleStream};

/// Metadata written next to an I/Q file.
#[derive(Clone, Debug, PartialEq)]
pub struct IqHeader {
    pub rate: f64,
    pub t0: f64,
    pub prn: u8,
    pub seed: u64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".hdr");
    PathBuf::from(p)
}

/// Writes `stream` to `path` and its header to `path.hdr`.
pub fn write_iq(path: &Path, stream: &SampleStream, prn: u8, seed: u64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_samples(&mut w, &stream.samples)?;
    w.flush()?;
    write_header(path, stream.rate, stream.t0, prn, seed, stream.len() as u64)
}

/// Drains `source` into `path` block by block, so long captures never sit in
/// memory. Returns the number of samples written.
pub fn write_iq_source<S: SampleSource + ?Sized>(
    path: &Path,
    source: &mut S,
    t0: f64,
    prn: u8,
    seed: u64,
) -> Result<u64> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut buf = vec![Complex64::default(); 1 << 14];
    let mut total = 0u64;
    loop {
        let n = source.read(&mut buf);
        write_samples(&mut w, &buf[..n])?;
        total += n as u64;
        if n < buf.len() {
            break;
        }
    }
    w.flush()?;
    write_header(path, source.rate(), t0, prn, seed, total)?;
    Ok(total)
}

fn write_samples<W: Write>(w: &mut W, samples: &[Complex64]) -> Result<()> {
    for z in samples {
        w.write_all(&(z.re as f32).to_le_bytes())?;
        w.write_all(&(z.im as f32).to_le_bytes())?;
    }
    Ok(())
}

fn write_header(path: &Path, rate: f64, t0: f64, prn: u8, seed: u64, samples: u64) -> Result<()> {
    let mut h = BufWriter::new(File::create(sidecar_path(path))?);
    writeln!(h, "format=cf32_le")?;
    writeln!(h, "rate={rate}")?;
    writeln!(h, "t0={t0}")?;
    writeln!(h, "prn={prn}")?;
    writeln!(h, "seed={seed}")?;
    writeln!(h, "samples={samples}")?;
    h.flush()?;
    Ok(())
}

/// Reads back a file produced by [`write_iq`].
pub fn read_iq(path: &Path) -> Result<(SampleStream, IqHeader)> {
    let hdr = BufReader::new(File::open(sidecar_path(path))?);
    let (mut rate, mut t0, mut prn, mut seed) = (None, None, None, None);
    for line in hdr.lines() {
        let line = line?;
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        let bad = || Error::Config(format!("bad I/Q header line: {line}"));
        match k.trim() {
            "rate" => rate = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
            "t0" => t0 = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
            "prn" => prn = Some(v.trim().parse::<u8>().map_err(|_| bad())?),
            "seed" => seed = Some(v.trim().parse::<u64>().map_err(|_| bad())?),
            _ => {}
        }
    }
    let missing = |k: &str| Error::Config(format!("I/Q header missing `{k}`"));
    let header = IqHeader {
        rate: rate.ok_or_else(|| missing("rate"))?,
        t0: t0.ok_or_else(|| missing("t0"))?,
        prn: prn.ok_or_else(|| missing("prn"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
    };

    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    if raw.len() % 8 != 0 {
        return Err(Error::Config("I/Q payload is not a whole number of cf32 samples".into()));
    }
    let samples = raw
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok((SampleStream::new(samples, header.rate, header.t0)?, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.cf32");
        let s = SampleStream::new(
            (0..100).map(|k| Complex64::new(k as f64 * 0.5, -(k as f64))).collect(),
            4.092e6,
            0.25,
        )
        .unwrap();
        write_iq(&path, &s, 7, 99).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 800);

        let (back, h) = read_iq(&path).unwrap();
        assert_eq!(h, IqHeader { rate: 4.092e6, t0: 0.25, prn: 7, seed: 99 });
        assert_eq!(back, s);
    }

    #[test]
    fn streaming_writer_matches_buffered() {
        let dir = tempfile::tempdir().unwrap();
        let s = SampleStream::new(
            (0..40_000).map(|k| Complex64::from_polar(1.0, k as f64 * 0.01)).collect(),
            1e6,
            0.0,
        )
        .unwrap();
        let a = dir.path().join("a.cf32");
        let b = dir.path().join("b.cf32");
        write_iq(&a, &s, 1, 5).unwrap();
        assert_eq!(write_iq_source(&b, &mut s.reader(), 0.0, 1, 5).unwrap(), 40_000);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(std::fs::read(sidecar_path(&a)).unwrap(), std::fs::read(sidecar_path(&b)).unwrap());
    }
}
