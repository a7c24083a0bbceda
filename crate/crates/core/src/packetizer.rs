//! Byte accounting for unequal-erasure-protected GOPs carried over RTP.
//!
//! Each GOP fills one transmission subblock (TSB): every row is a
//! Reed–Solomon codeword of `codeword_len` bytes, `k` data and `s` parity,
//! with `s` chosen per layer. Two TSBs (one per UE of a two-UE group) are
//! stacked into a transmission block whose columns become RTP payloads, and
//! column `t` of both TSBs is superposed in timeslot `t`. A codeword
//! survives any `s` lost columns.

use std::collections::BTreeSet;
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UxpProfile {
    pub codeword_len: usize,
    /// `(layer id, parity bytes s)` per protection class.
    pub parity_per_class: Vec<(usize, usize)>,
    pub rtp_payload_bytes: usize,
}

impl Default for UxpProfile {
    /// Strongest protection on the base layer, tapering over three
    /// enhancement layers.
    fn default() -> Self {
        UxpProfile {
            codeword_len: 255,
            parity_per_class: vec![(0, 55), (1, 40), (2, 30), (3, 20)],
            rtp_payload_bytes: 1400,
        }
    }
}

impl UxpProfile {
    pub fn validate(&self) -> Result<()> {
        if self.codeword_len == 0 || self.rtp_payload_bytes == 0 {
            return Err(Error::config("codeword length and RTP payload must be positive"));
        }
        for &(layer, s) in &self.parity_per_class {
            if s >= self.codeword_len {
                return Err(Error::config(format!(
                    "layer {layer}: {s} parity bytes leave no data in a {}-byte codeword",
                    self.codeword_len
                )));
            }
        }
        Ok(())
    }

    pub fn parity(&self, layer: usize) -> Result<usize> {
        self.parity_per_class
            .iter()
            .find(|(l, _)| *l == layer)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::config(format!("no protection class for layer {layer}")))
    }
}

/// Rows of one layer inside a TSB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerRows {
    pub layer: usize,
    pub rows: Range<usize>,
    pub parity: usize,
    pub data_bytes: usize,
    /// Unused data bytes in the layer's last row.
    pub padding: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsbLayout {
    pub rows: usize,
    pub columns: usize,
    pub layers: Vec<LayerRows>,
}

impl TsbLayout {
    pub fn total_bytes(&self) -> usize {
        self.rows * self.columns
    }

    pub fn data_bytes(&self) -> usize {
        self.layers.iter().map(|l| l.data_bytes).sum()
    }

    pub fn padding_bytes(&self) -> usize {
        self.layers.iter().map(|l| l.padding).sum()
    }

    pub fn parity_bytes(&self) -> usize {
        self.layers.iter().map(|l| l.rows.len() * l.parity).sum()
    }
}

/// Lays out one GOP's layers (index = layer id) row by row.
pub fn layout_tsb(gop_bytes_per_layer: &[usize], profile: &UxpProfile) -> Result<TsbLayout> {
    profile.validate()?;
    let mut layers = Vec::new();
    let mut row = 0;
    for (layer, &bytes) in gop_bytes_per_layer.iter().enumerate() {
        if bytes == 0 {
            log::warn!("layer {layer} carries no bytes; skipped");
            continue;
        }
        let parity = profile.parity(layer)?;
        let k = profile.codeword_len - parity;
        let n_rows = bytes.div_ceil(k);
        layers.push(LayerRows { layer, rows: row..row + n_rows, parity, data_bytes: bytes, padding: n_rows * k - bytes });
        row += n_rows;
    }
    Ok(TsbLayout { rows: row, columns: profile.codeword_len, layers })
}

/// One RTP packet of the superposed schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub timeslot: usize,
    pub tsb_a_col: Option<usize>,
    pub tsb_b_col: Option<usize>,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketSchedule {
    pub slots: Vec<Slot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl PacketSchedule {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Column indices of one TSB in transmission order.
    pub fn columns(&self, side: Side) -> Vec<usize> {
        self.slots
            .iter()
            .filter_map(|s| match side {
                Side::A => s.tsb_a_col,
                Side::B => s.tsb_b_col,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.slots {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Interleaves two TSBs column by column: packet `t` carries column `t` of
/// both, one byte per row.
pub fn assemble_tb(tsb_a: &TsbLayout, tsb_b: &TsbLayout, rtp_payload_bytes: usize) -> Result<PacketSchedule> {
    let n = tsb_a.columns.max(tsb_b.columns);
    let mut slots = Vec::with_capacity(n);
    for t in 0..n {
        let a = (t < tsb_a.columns && tsb_a.rows > 0).then_some(t);
        let b = (t < tsb_b.columns && tsb_b.rows > 0).then_some(t);
        let bytes = a.map_or(0, |_| tsb_a.rows) + b.map_or(0, |_| tsb_b.rows);
        if bytes > rtp_payload_bytes {
            return Err(Error::PayloadOverflow { bytes, limit: rtp_payload_bytes });
        }
        slots.push(Slot { timeslot: t, tsb_a_col: a, tsb_b_col: b, bytes });
    }
    Ok(PacketSchedule { slots })
}

/// Which layers of one TSB decode after the packets in `lost` are erased.
/// Every codeword spans all columns, so each row loses one byte per lost
/// packet carrying that TSB.
pub fn erasure_recoverability(
    schedule: &PacketSchedule,
    lost: &BTreeSet<usize>,
    layout: &TsbLayout,
    side: Side,
) -> Result<Vec<bool>> {
    if let Some(&bad) = lost.iter().find(|&&t| t >= schedule.len()) {
        return Err(Error::domain(format!("lost packet {bad} is not in the schedule")));
    }
    let erased = lost
        .iter()
        .filter(|&&t| {
            let s = &schedule.slots[t];
            match side {
                Side::A => s.tsb_a_col.is_some(),
                Side::B => s.tsb_b_col.is_some(),
            }
        })
        .count();
    Ok(layout.layers.iter().map(|l| erased <= l.parity).collect())
}

/// Probability that a codeword with `parity` erasure capacity fails when
/// each of its `codeword_len` bytes is lost independently with probability `p`.
pub fn layer_loss_probability(codeword_len: usize, parity: usize, p: f64) -> f64 {
    // Accumulate the binomial pmf upward from e = 0 via the ratio recurrence.
    let mut pmf = (1.0 - p).powi(codeword_len as i32);
    let mut kept = 0.0;
    for e in 0..=parity.min(codeword_len) {
        kept += pmf;
        pmf *= (codeword_len - e) as f64 / (e + 1) as f64 * p / (1.0 - p);
    }
    (1.0 - kept).max(0.0)
}
