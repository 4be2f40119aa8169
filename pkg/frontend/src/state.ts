export type Phase = 'idle' | 'recording' | 'recorded' | 'converting' | 'done' | 'error'

export interface RecordingState {
  phase: Phase
  audio: Blob | null
  transcription: string | null
  latex: string | null
  errorStage: string | null
  errorMessage: string | null
}

const initial: RecordingState = {
  phase: 'idle',
  audio: null,
  transcription: null,
  latex: null,
  errorStage: null,
  errorMessage: null,
}

/**
 * Pure state machine behind the four buttons (record, play, download,
 * convert). Playback/download/convert are enabled only with a finished
 * recording in hand; latex exists only in the done phase; a single convert
 * request may be in flight at a time.
 */
export class RecordingStore {
  state: RecordingState = { ...initial }
  private listeners: Array<(s: RecordingState) => void> = []

  subscribe(fn: (s: RecordingState) => void): void {
    this.listeners.push(fn)
  }

  private set(next: RecordingState): RecordingState {
    this.state = next
    this.listeners.forEach(fn => fn(next))
    return next
  }

  get canRecord(): boolean {
    return this.state.phase !== 'converting'
  }

  get canPlayback(): boolean {
    return this.state.phase === 'recorded' || this.state.phase === 'done'
  }

  get canDownload(): boolean {
    return this.canPlayback
  }

  get canConvert(): boolean {
    return this.canPlayback
  }

  get isRecording(): boolean {
    return this.state.phase === 'recording'
  }

  startRecording(): RecordingState {
    if (!this.canRecord) throw new Error(`cannot start recording in phase ${this.state.phase}`)
    return this.set({ ...initial, phase: 'recording' })
  }

  finishRecording(audio: Blob): RecordingState {
    if (this.state.phase !== 'recording') {
      throw new Error(`cannot finish recording in phase ${this.state.phase}`)
    }
    return this.set({ ...initial, phase: 'recorded', audio })
  }

  recordingFailed(message: string): RecordingState {
    return this.set({
      ...initial,
      phase: 'error',
      errorStage: 'recording',
      errorMessage: message,
    })
  }

  startConvert(): RecordingState {
    if (!this.canConvert) throw new Error(`cannot convert in phase ${this.state.phase}`)
    return this.set({
      ...this.state,
      phase: 'converting',
      transcription: null,
      latex: null,
      errorStage: null,
      errorMessage: null,
    })
  }

  convertSucceeded(transcription: string, latex: string): RecordingState {
    if (this.state.phase !== 'converting') {
      throw new Error(`unexpected convert result in phase ${this.state.phase}`)
    }
    return this.set({ ...this.state, phase: 'done', transcription, latex })
  }

  convertFailed(stage: string, message: string, transcription: string | null = null): RecordingState {
    if (this.state.phase !== 'converting') {
      throw new Error(`unexpected convert failure in phase ${this.state.phase}`)
    }
    return this.set({
      ...this.state,
      phase: 'error',
      transcription,
      latex: null,
      errorStage: stage,
      errorMessage: message,
    })
  }

  reset(): RecordingState {
    return this.set({ ...initial })
  }
}
