//! Snapshot persistence on a worker thread.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread::JoinHandle;

use crate::coupled::{Snapshot, SnapshotSink, SLICE_HEIGHTS};
use crate::error::{Error, Result};
use crate::fracop::RoadGrid;

use super::csv::{write_csv_file, Table};
use super::dump::{write_field_values, FieldHeader, DTYPE, LAYOUT};

pub const TRUNCATION_MARKER: &str = "TRUNCATED";
/// Snapshots queued before the stepper blocks.
pub const DEFAULT_QUEUE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkLayout {
    pub grid: RoadGrid,
    pub ny: usize,
    pub dy: f64,
    /// Every `road_stride`-th road node is written.
    pub road_stride: usize,
}

/// Writes `road/road_NNNNN.csv` (`t,x,u`), `slices/slice_NNNNN.csv`
/// (`t,x,v_y0,v_y1`) and `field/field_NNNNN.{bin,json}`.
pub struct DirectorySink {
    dir: PathBuf,
    tx: Option<SyncSender<Snapshot>>,
    worker: Option<JoinHandle<Result<Vec<String>>>>,
    files: Vec<String>,
}

impl DirectorySink {
    pub fn spawn(dir: &Path, layout: SinkLayout, queue: usize) -> Result<Self> {
        if layout.road_stride == 0 {
            return Err(Error::InvalidParam("road_stride must be >= 1".into()));
        }
        for sub in ["road", "slices", "field"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        let (tx, rx) = sync_channel::<Snapshot>(queue.max(1));
        let root = dir.to_path_buf();
        let worker = std::thread::Builder::new()
            .name("snapshot-writer".into())
            .spawn(move || {
                let mut files = Vec::new();
                for snap in rx {
                    write_snapshot(&root, &layout, &snap, &mut files)?;
                }
                Ok(files)
            })
            .map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), tx: Some(tx), worker: Some(worker), files: Vec::new() })
    }

    /// Relative paths written so far; complete after `finish`.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn join(&mut self) -> Result<()> {
        self.tx = None;
        if let Some(w) = self.worker.take() {
            let files = w.join().map_err(|_| Error::Format("snapshot writer panicked".into()))??;
            self.files = files;
        }
        Ok(())
    }
}

fn write_snapshot(root: &Path, layout: &SinkLayout, snap: &Snapshot, files: &mut Vec<String>) -> Result<()> {
    let grid = &layout.grid;
    let nodes: Vec<usize> = (0..grid.nx).step_by(layout.road_stride).collect();
    let mut road = Table::new(&["t", "x", "u"]);
    for &i in &nodes {
        road.rows.push(vec![snap.t, grid.x(i), snap.u[i]]);
    }
    let rel = format!("road/road_{:05}.csv", snap.index);
    write_csv_file(&root.join(&rel), &road)?;
    files.push(rel);
    if snap.slices.len() == SLICE_HEIGHTS.len() {
        let mut sl = Table::new(&["t", "x", "v_y0", "v_y1"]);
        for &i in &nodes {
            sl.rows.push(vec![snap.t, grid.x(i), snap.slices[0][i], snap.slices[1][i]]);
        }
        let rel = format!("slices/slice_{:05}.csv", snap.index);
        write_csv_file(&root.join(&rel), &sl)?;
        files.push(rel);
    }
    if let Some(field) = &snap.field {
        let header = FieldHeader {
            nx: grid.nx,
            ny: layout.ny,
            dtype: DTYPE.into(),
            layout: LAYOUT.into(),
            x_origin: grid.x(0),
            y_origin: 0.0,
            dx: grid.dx(),
            dy: layout.dy,
            t: snap.t,
        };
        let stem = format!("field/field_{:05}", snap.index);
        write_field_values(&root.join(&stem), &header, field)?;
        files.push(format!("{stem}.bin"));
        files.push(format!("{stem}.json"));
    }
    Ok(())
}

impl SnapshotSink for DirectorySink {
    fn accept(&mut self, snapshot: Snapshot) -> Result<()> {
        let sent = match &self.tx {
            Some(tx) => tx.send(snapshot).is_ok(),
            None => false,
        };
        if sent {
            return Ok(());
        }
        // the worker is gone; surface its error
        self.join()?;
        Err(Error::Format("snapshot writer stopped".into()))
    }

    fn finish(&mut self, failure: Option<&Error>) -> Result<()> {
        let joined = self.join();
        if let Some(err) = failure {
            let p = self.dir.join(TRUNCATION_MARKER);
            fs::write(&p, format!("{err}\n")).map_err(|e| Error::io(&p, e))?;
            self.files.push(TRUNCATION_MARKER.into());
        }
        joined
    }
}

impl Drop for DirectorySink {
    fn drop(&mut self) {
        let _ = self.join();
    }
}

/// Clones every snapshot into `first`, hands the original to `second`.
pub struct Tee<'a> {
    pub first: &'a mut dyn SnapshotSink,
    pub second: &'a mut dyn SnapshotSink,
}

impl SnapshotSink for Tee<'_> {
    fn accept(&mut self, snapshot: Snapshot) -> Result<()> {
        self.first.accept(snapshot.clone())?;
        self.second.accept(snapshot)
    }

    fn finish(&mut self, failure: Option<&Error>) -> Result<()> {
        let a = self.first.finish(failure);
        let b = self.second.finish(failure);
        a.and(b)
    }
}
