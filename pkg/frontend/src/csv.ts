/**
 * Handling of the dataset CSV a session_summary hands back. The server
 * already writes the exact analyzer schema; the client only saves it, or
 * concatenates several sessions into one dataset.
 */

export function mergeCsvTexts(texts: string[]): string {
  if (texts.length === 0) throw new Error("nothing to merge");
  const out: string[] = [];
  texts.forEach((text, i) => {
    const lines = text.split("\n").filter((l) => l.length > 0);
    if (lines.length === 0) throw new Error(`session csv ${i} is empty`);
    const header = lines[0]!;
    if (i === 0) {
      out.push(header);
    } else if (header !== out[0]) {
      throw new Error(`session csv ${i} header mismatch`);
    }
    out.push(...lines.slice(1));
  });
  return out.join("\n") + "\n";
}

/** Browser-only: hand the text to the user as a file download. */
export function downloadCsv(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}
