class Worker:
    def start(self):
        raise RuntimeError("worker failed to start")


Worker().start()
