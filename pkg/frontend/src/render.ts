import katex from 'katex'

/**
 * Render LaTeX to HTML for the modal preview. Returns null when rendering
 * fails entirely; the modal always shows the raw source either way.
 */
export function renderLatex(latex: string): string | null {
  try {
    return katex.renderToString(latex, {
      displayMode: true,
      throwOnError: false,
      output: 'htmlAndMathml',
    })
  } catch {
    return null
  }
}
