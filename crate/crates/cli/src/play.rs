//! Terminal player: numbered choices plus save, reload, restart and quit.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use syp_core::{apply_choice, load_session, restart, save_session, start_session, Session, Story};

const BOLD: &str = "\x1b[1m";
const DIM: &str = "\x1b[2m";
const RESET: &str = "\x1b[0m";

struct Screen<W> {
    out: W,
    color: bool,
    /// Transcript lines already printed.
    shown: usize,
}

impl<W: Write> Screen<W> {
    fn styled(&mut self, style: &str, text: &str) -> io::Result<()> {
        if self.color {
            writeln!(self.out, "{style}{text}{RESET}")
        } else {
            writeln!(self.out, "{text}")
        }
    }

    fn note(&mut self, text: &str) -> io::Result<()> {
        self.styled(DIM, &format!("({text})"))
    }

    /// Print transcript lines not yet shown, then the choices or the ending.
    fn show(&mut self, story: &Story, s: &Session) -> io::Result<()> {
        let lines = s.transcript(story);
        for line in &lines[self.shown.min(lines.len())..] {
            writeln!(self.out, "{line}")?;
        }
        self.shown = lines.len();
        if s.finished {
            self.styled(BOLD, "THE END")?;
        } else {
            for (i, c) in s.choices(story).iter().enumerate() {
                self.styled(BOLD, &format!("  {}) {}", i + 1, c.label))?;
            }
        }
        Ok(())
    }

    fn redraw(&mut self, story: &Story, s: &Session) -> io::Result<()> {
        self.shown = 0;
        writeln!(self.out)?;
        self.show(story, s)
    }
}

pub fn run<R: BufRead, W: Write>(story: &Story, save_path: &Path, input: R, out: W, color: bool) -> io::Result<()> {
    let mut screen = Screen { out, color, shown: 0 };
    screen.styled(BOLD, &format!("== {} ==", story.narrative().title))?;
    let mut session = start_session(story);
    screen.show(story, &session)?;

    let mut lines = input.lines();
    loop {
        let n = session.choices(story).len();
        let picks = if n > 0 { format!("1-{n}, ") } else { String::new() };
        write!(screen.out, "[{picks}s]ave [r]eload [n]ew [q]uit > ")?;
        screen.out.flush()?;
        let Some(line) = lines.next() else {
            writeln!(screen.out)?;
            return Ok(());
        };
        let cmd = line?.trim().to_lowercase();
        match cmd.as_str() {
            "q" | "quit" => return Ok(()),
            "s" | "save" => match fs::write(save_path, save_session(&session)) {
                Ok(()) => screen.note(&format!("saved to {}", save_path.display()))?,
                Err(e) => screen.note(&format!("could not save: {e}"))?,
            },
            "r" | "reload" => match fs::read(save_path) {
                Ok(bytes) => match load_session(&bytes, story) {
                    Ok(s) => {
                        session = s;
                        screen.note("reloaded")?;
                        screen.redraw(story, &session)?;
                    }
                    Err(e) => screen.note(&e.to_string())?,
                },
                Err(e) if e.kind() == io::ErrorKind::NotFound => screen.note("nothing saved yet")?,
                Err(e) => screen.note(&format!("could not reload: {e}"))?,
            },
            "n" | "new" | "restart" => {
                session = restart(story);
                screen.redraw(story, &session)?;
            }
            other => {
                let picked = other
                    .parse::<usize>()
                    .ok()
                    .and_then(|k| k.checked_sub(1))
                    .and_then(|k| session.choices(story).get(k))
                    .map(|c| c.label.clone());
                match picked {
                    Some(label) => {
                        session = apply_choice(story, &session, &label).expect("offered choice applies");
                        screen.show(story, &session)?;
                    }
                    None => screen.note(&format!("unknown command {other:?}"))?,
                }
            }
        }
    }
}
